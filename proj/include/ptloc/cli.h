/*
 * Copyright 2026 The ptloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PTLOC_CLI_H_
#define PTLOC_CLI_H_

namespace ptloc {

// Entry point of the `ptloc` tool. Returns 0 on success, 1 on a usage error
// and 2 when the command itself fails.
int RunCli(int argc, const char* const* argv);

}  // namespace ptloc

#endif  // PTLOC_CLI_H_
