#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace fsnn {

// Unscrambled base-2 Sobol sequence with Joe-Kuo direction numbers,
// generated in Gray-code order.
class SobolSampler {
public:
    static constexpr std::size_t kMaxDimension = 10;
    static constexpr unsigned kBits = 32;

    explicit SobolSampler(std::size_t dimension, bool skip_zero = true) : dim_(dimension) {
        if (dimension == 0 || dimension > kMaxDimension)
            throw ConfigError("sobol: dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
        directions_.resize(dim_);
        for (std::size_t d = 0; d < dim_; ++d)
            directions_[d] = make_directions(d);
        state_.assign(dim_, 0u);
        if (skip_zero)
            next();
    }

    std::size_t dimension() const { return dim_; }
    // Index of the next point to be emitted.
    std::uint64_t index() const { return index_; }

    std::vector<double> next() {
        std::vector<double> point(dim_);
        for (std::size_t d = 0; d < dim_; ++d)
            point[d] = static_cast<double>(state_[d]) * 0x1p-32;
        // Gray code: flip the direction number at the lowest zero bit.
        const unsigned c = static_cast<unsigned>(std::countr_one(index_));
        if (c >= kBits)
            throw SamplingError("sobol: sequence exhausted");
        for (std::size_t d = 0; d < dim_; ++d)
            state_[d] ^= directions_[d][c];
        ++index_;
        return point;
    }

private:
    struct Primitive {
        unsigned degree;
        unsigned coeffs;
        std::array<std::uint32_t, 5> m;
    };

    // Joe & Kuo (2008), dimensions 2..10; dimension 1 is the van der Corput
    // sequence.
    static constexpr std::array<Primitive, kMaxDimension - 1> kTable = {{
        {1, 0, {1}},
        {2, 1, {1, 3}},
        {3, 1, {1, 3, 1}},
        {3, 2, {1, 1, 1}},
        {4, 1, {1, 1, 3, 3}},
        {4, 4, {1, 3, 5, 13}},
        {5, 2, {1, 1, 5, 5, 17}},
        {5, 4, {1, 1, 5, 5, 5}},
        {5, 7, {1, 1, 7, 11, 19}},
    }};

    static std::array<std::uint32_t, kBits> make_directions(std::size_t d) {
        std::array<std::uint32_t, kBits> v{};
        if (d == 0) {
            for (unsigned i = 0; i < kBits; ++i)
                v[i] = 1u << (kBits - 1 - i);
            return v;
        }
        const Primitive& p = kTable[d - 1];
        const unsigned s = p.degree;
        for (unsigned i = 0; i < s; ++i)
            v[i] = p.m[i] << (kBits - 1 - i);
        for (unsigned i = s; i < kBits; ++i) {
            std::uint32_t x = v[i - s] ^ (v[i - s] >> s);
            for (unsigned k = 1; k < s; ++k)
                if ((p.coeffs >> (s - 1 - k)) & 1u)
                    x ^= v[i - k];
            v[i] = x;
        }
        return v;
    }

    std::size_t dim_;
    std::uint64_t index_ = 0;
    std::vector<std::uint32_t> state_;
    std::vector<std::array<std::uint32_t, kBits>> directions_;
};

} // namespace fsnn
