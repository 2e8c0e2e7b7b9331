#pragma once

#include <string>
#include <string_view>

namespace edgeids {

// Lowercase hex SHA-256 of the bytes of `data` (64 characters).
std::string sha256_hex(std::string_view data);

}  // namespace edgeids
