// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace crag {

/// 64-bit FNV-1a. Stable across platforms and runs; used for seeding and fingerprints, not security.
class Fnv1a {
public:
    static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ULL;
    static constexpr std::uint64_t prime = 0x100000001b3ULL;

    Fnv1a& update(std::string_view bytes) noexcept {
        for (unsigned char c : bytes) {
            state_ ^= c;
            state_ *= prime;
        }
        return *this;
    }

    Fnv1a& update(std::uint64_t value) noexcept {
        for (int i = 0; i < 8; ++i) {
            state_ ^= static_cast<unsigned char>(value >> (8 * i));
            state_ *= prime;
        }
        return *this;
    }

    /// Length-prefixed field, so ("ab","c") and ("a","bc") hash differently.
    Fnv1a& field(std::string_view bytes) noexcept {
        update(static_cast<std::uint64_t>(bytes.size()));
        return update(bytes);
    }

    std::uint64_t digest() const noexcept { return state_; }

private:
    std::uint64_t state_ = offset_basis;
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string to_hex(std::uint64_t value);

}  // namespace crag
