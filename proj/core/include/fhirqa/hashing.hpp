#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace fhirqa {

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// 64-bit FNV-1a. Stable across platforms; used to derive per-item seeds.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis = 0xcbf29ce484222325ULL) {
    std::uint64_t h = basis;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Mixes a run seed with a key so that each key gets an independent stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view key) {
    std::uint64_t z = fnv1a64(key) ^ (seed + 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace fhirqa
