#pragma once

#include <cstdint>
#include <string_view>

#include <ATen/core/Generator.h>

namespace ffgan {

/// Derives an independent child seed from a root seed and a fixed label, so
/// every component draws from its own stream without sharing state. Forks are
/// pure functions: the same (root, label, index) always yields the same seed.
std::uint64_t fork_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0);

/// A fresh libtorch CPU generator seeded with `seed`.
at::Generator torch_generator(std::uint64_t seed);

}  // namespace ffgan
