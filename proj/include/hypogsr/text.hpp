// Copyright 2026 The hypogsr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HYPOGSR_TEXT_HPP_
#define HYPOGSR_TEXT_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypogsr {

std::string_view trim(std::string_view s);
// Splits on LF, dropping a trailing CR from each line.
std::vector<std::string_view> split_lines(std::string_view text);
// Comma-separated cells; double quotes group a cell and `""` escapes a quote.
std::vector<std::string> split_csv_row(std::string_view line);
std::vector<std::string> split(std::string_view text, char sep);

// Whole-string parse; nullopt on trailing garbage.
std::optional<double> parse_double(std::string_view text);
// Shortest representation that parses back to the same double.
std::string format_double(double value);
// Fixed-point with `digits` decimals.
std::string format_fixed(double value, int digits);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace hypogsr

#endif  // HYPOGSR_TEXT_HPP_
