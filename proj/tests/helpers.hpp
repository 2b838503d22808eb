// Copyright 2026 The Netweave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "netweave/grammar.hpp"
#include "netweave/handlers.hpp"

namespace testutil {

// The shipped grammar directory, loaded once. Tests run from the repository
// root (see tests/CMakeLists.txt), so the relative path holds.
inline const netweave::GrammarSet& grammars() {
  static const netweave::GrammarSet g =
      netweave::load_grammar_dir("protocols", netweave::HandlerRegistry::builtin());
  return g;
}

inline const netweave::HandlerRegistry& registry() {
  return netweave::HandlerRegistry::builtin();
}

}  // namespace testutil
