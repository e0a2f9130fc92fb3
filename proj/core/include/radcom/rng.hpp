#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>

namespace radcom {

/// Splittable counter-based random stream (xoshiro256** core, splitmix64
/// seeding). A stream derived from the same (seed, tags...) chain produces
/// the same values on every platform and thread, which is what makes
/// Monte-Carlo sweeps reproducible under parallel scheduling.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed);

    /// Derives an independent child stream. Children with distinct tags are
    /// statistically independent of each other and of the parent.
    RngStream child(std::uint64_t tag) const;
    RngStream child(std::initializer_list<std::uint64_t> tags) const;

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);
    /// Standard real Gaussian, Box-Muller (stdlib-independent determinism).
    double gaussian();
    /// Circularly-symmetric complex Gaussian CN(0, 1).
    std::complex<double> cgaussian();
    /// Unit-modulus complex number with uniform phase.
    std::complex<double> unit_phase();

  private:
    std::uint64_t s_[4];
    double cached_gaussian_ = 0.0;
    bool has_cached_ = false;
    std::uint64_t key_;
};

} // namespace radcom
