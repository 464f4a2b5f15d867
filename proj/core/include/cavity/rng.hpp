#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace cavity {

// SplitMix64 mixing step.  Used both as the generator advance and as the
// key-derivation hash, so every stream is a pure function of its 64-bit key.
inline uint64_t mix64(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// Key derivation: seed -> independent sub-stream keys.  Streams derived from
// distinct (tag, index) tuples never collide in practice, which is what makes
// parallel and serial execution bit-identical.
inline uint64_t derive_seed(uint64_t seed, uint64_t a) {
    return mix64(seed + kGolden * (a + 1));
}
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}
inline uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return derive_seed(derive_seed(seed, a, b), c);
}

// Compile-time FNV-1a, for readable stream tags: derive_seed(s, tag("sweep")).
constexpr uint64_t tag(const char* s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    while (*s) h = (h ^ static_cast<uint64_t>(*s++)) * 0x100000001b3ULL;
    return h;
}

// Counter-based generator: splitmix64 over an incrementing state.
// Deterministic across platforms; no libstdc++ distributions are used
// anywhere so results are reproducible bit-for-bit.
class Rng {
  public:
    explicit Rng(uint64_t key) : state_(key) {}

    uint64_t next_u64() { return mix64(state_ += kGolden); }

    // uniform in [0,1)
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in {0,...,n-1}
    uint64_t next_below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(next_u64()) * n) >> 64);
    }

    // Po(lambda) by inversion (sequential CDF search); fine for lambda <~ 600.
    int poisson(double lambda) {
        if (lambda <= 0.0) return 0;
        double u = next_unit();
        double p = std::exp(-lambda);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 100000) {
            ++k;
            p *= lambda / k;
            cdf += p;
        }
        return k;
    }

    // standard normal via Box-Muller (cosine branch only, keeps the stream
    // consumption rate fixed at two uniforms per call)
    double normal() {
        double u1 = 1.0 - next_unit();
        double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Marsaglia-Tsang gamma sampler
    double gamma(double shape) {
        if (shape < 1.0) {
            double u = next_unit();
            return gamma(shape + 1.0) * std::pow(u > 0 ? u : 1e-300, 1.0 / shape);
        }
        double d = shape - 1.0 / 3.0;
        double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = next_unit();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u > 0 ? u : 1e-300) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // symmetric Dirichlet(alpha,...,alpha) on the q-simplex
    void dirichlet(double alpha, std::span<double> out) {
        double s = 0.0;
        for (double& x : out) {
            x = gamma(alpha);
            s += x;
        }
        if (s <= 0.0) {
            for (double& x : out) x = 1.0 / static_cast<double>(out.size());
            return;
        }
        for (double& x : out) x /= s;
    }

    // categorical draw from (unnormalized) weights; total must be > 0
    int categorical(std::span<const double> weights, double total) {
        double u = next_unit() * total;
        double acc = 0.0;
        for (size_t i = 0; i + 1 < weights.size(); ++i) {
            acc += weights[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(weights.size()) - 1;
    }

  private:
    uint64_t state_;
};

}  // namespace cavity
