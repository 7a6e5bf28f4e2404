// Copyright 2026 The incdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef INCDIAL_UTIL_HPP
#define INCDIAL_UTIL_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace incdial {

std::string sha256_hex(std::string_view data);

// Throws ConfigError when the file is missing or unreadable.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view data);

// Throws ConfigError for a missing file, SyntaxError for bad JSON.
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace incdial

#endif  // INCDIAL_UTIL_HPP
