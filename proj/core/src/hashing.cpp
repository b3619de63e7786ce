// SPDX-License-Identifier: Apache-2.0

#include "crag/hashing.hpp"

#include <fmt/format.h>

namespace crag {

std::string to_hex(std::uint64_t value) {
    return fmt::format("{:016x}", value);
}

}  // namespace crag
