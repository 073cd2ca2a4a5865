#include "fxvol/errors.hpp"
#include "fxvol/simd.hpp"
#include "tables.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace fxvol::simd {
namespace {

bool cpu_has_avx2_fma() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* select_default() noexcept {
    if (const char* env = std::getenv("FXVOL_SIMD"); env != nullptr) {
        const std::string want(env);
        if (want == "scalar") return &scalar_kernels();
        if (want == "avx2" && kernels_for(Isa::Avx2) != nullptr) return kernels_for(Isa::Avx2);
        if (want == "neon" && kernels_for(Isa::Neon) != nullptr) return kernels_for(Isa::Neon);
    }
    if (const auto* t = kernels_for(Isa::Avx2)) return t;
    if (const auto* t = kernels_for(Isa::Neon)) return t;
    return &scalar_kernels();
}

std::atomic<const KernelTable*>& slot() noexcept {
    static std::atomic<const KernelTable*> current{select_default()};
    return current;
}

void require_same(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

}  // namespace

std::string_view to_string(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "scalar";
}

const KernelTable* kernels_for(Isa isa) noexcept {
    switch (isa) {
        case Isa::Scalar: return &scalar_kernels();
        case Isa::Avx2: return cpu_has_avx2_fma() ? detail::avx2_table() : nullptr;
        case Isa::Neon: return detail::neon_table();
    }
    return nullptr;
}

const KernelTable& active() noexcept { return *slot().load(std::memory_order_relaxed); }

bool force(Isa isa) noexcept {
    const KernelTable* t = kernels_for(isa);
    if (t == nullptr) return false;
    slot().store(t, std::memory_order_relaxed);
    return true;
}

double dot(std::span<const double> x, std::span<const double> y) {
    require_same(x.size(), y.size(), "dot");
    return active().dot(x.data(), y.data(), x.size());
}

double weighted_dot(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
    require_same(x.size(), y.size(), "weighted_dot");
    require_same(x.size(), w.size(), "weighted_dot");
    return active().weighted_dot(x.data(), y.data(), w.data(), x.size());
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    require_same(x.size(), y.size(), "axpy");
    active().axpy(a, x.data(), y.data(), x.size());
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
    require_same(x.size(), y.size(), "squared_distance");
    return active().squared_distance(x.data(), y.data(), x.size());
}

void rank1_update(double alpha, std::span<const double> x, std::span<const double> z, std::span<double> out) {
    require_same(out.size(), x.size() * z.size(), "rank1_update");
    const auto& k = active();
    const std::size_t cols = z.size();
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double a = alpha * x[i];
        if (a != 0.0) k.axpy(a, z.data(), out.data() + i * cols, cols);
    }
}

}  // namespace fxvol::simd
