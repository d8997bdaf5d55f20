// Copyright 2026 The LGSO Authors
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

#pragma once

#include <string>
#include <vector>

namespace lgso {

/// Shortest decimal form that reads back to the same double.
std::string format_number(double v);
/// Parses a full cell; accepts nan and inf. Throws DataError naming `where`.
double parse_number(const std::string& cell, const std::string& where);
/// Splits one comma-separated line. A trailing comma yields an empty last cell.
std::vector<std::string> split_row(const std::string& line);

}  // namespace lgso
