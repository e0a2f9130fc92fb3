#include "radcom/rng.hpp"

#include <cmath>
#include <numbers>

namespace radcom {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

RngStream::RngStream(std::uint64_t seed) : key_(seed) {
    std::uint64_t x = seed;
    for (auto& s : s_) s = splitmix64(x);
}

RngStream RngStream::child(std::uint64_t tag) const {
    std::uint64_t x = key_ ^ (0x6a09e667f3bcc909ULL + tag * 0x9e3779b97f4a7c15ULL);
    return RngStream(splitmix64(x));
}

RngStream RngStream::child(std::initializer_list<std::uint64_t> tags) const {
    RngStream r = *this;
    for (auto t : tags) r = r.child(t);
    return r;
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t* s = s_;
    const std::uint64_t result = rotl(s[1] * 5, 7) * 9;
    const std::uint64_t t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = rotl(s[3], 45);
    return result;
}

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::gaussian() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_gaussian_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::complex<double> RngStream::cgaussian() {
    // Independent real/imag parts with variance 1/2 each.
    const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
    const double re = gaussian() * inv_sqrt2;
    const double im = gaussian() * inv_sqrt2;
    return {re, im};
}

std::complex<double> RngStream::unit_phase() {
    const double a = uniform(0.0, 2.0 * std::numbers::pi);
    return {std::cos(a), std::sin(a)};
}

} // namespace radcom
