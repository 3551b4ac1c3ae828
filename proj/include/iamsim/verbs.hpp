// Copyright 2026 The iamsim Authors.
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

#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

#include "iamsim/error.hpp"
#include "iamsim/policy.hpp"

namespace iamsim {

enum class VerbKind { kRead, kWrite };

// Maps operation verb prefixes (Get, Put, ...) to read/write access.
// Text form: one `Verb<TAB>read|write` per line; blank lines and lines
// starting with '#' are ignored.
class VerbTable {
 public:
  VerbTable() = default;

  static VerbTable parse(std::string_view text) {
    VerbTable table;
    std::istringstream in{std::string(text)};
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line.front() == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos || line.find('\t', tab + 1) != line.npos) {
        throw ParseError("verb table line " + std::to_string(lineno) +
                         ": expected Verb<TAB>read|write");
      }
      std::string verb = line.substr(0, tab);
      std::string kind = line.substr(tab + 1);
      if (verb.empty() || !std::isupper(static_cast<unsigned char>(verb[0])) ||
          !std::all_of(verb.begin(), verb.end(), detail::is_operation_char)) {
        throw ParseError("verb table line " + std::to_string(lineno) +
                         ": verb must be a capitalized alphanumeric token");
      }
      if (kind == "read") {
        table.verbs_[verb] = VerbKind::kRead;
      } else if (kind == "write") {
        table.verbs_[verb] = VerbKind::kWrite;
      } else {
        throw ParseError("verb table line " + std::to_string(lineno) +
                         ": kind must be read or write, got \"" + kind + "\"");
      }
    }
    return table;
  }

  static const VerbTable& defaults() {
    static const VerbTable table = parse(kDefaultText);
    return table;
  }

  // Longest verb that prefixes `operation` at a word boundary: the verb
  // must be followed by an uppercase letter, a digit, or the end.
  std::optional<std::string> verb_of(std::string_view operation) const {
    std::optional<std::string> best;
    for (const auto& [verb, _] : verbs_) {
      if (operation.substr(0, verb.size()) != verb) continue;
      if (operation.size() > verb.size()) {
        auto next = static_cast<unsigned char>(operation[verb.size()]);
        if (!std::isupper(next) && !std::isdigit(next)) continue;
      }
      if (!best || verb.size() > best->size()) best = verb;
    }
    return best;
  }

  std::optional<VerbKind> kind_of(std::string_view verb) const {
    auto it = verbs_.find(std::string(verb));
    if (it == verbs_.end()) return std::nullopt;
    return it->second;
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [verb, kind] : verbs_) {
      out += verb;
      out += '\t';
      out += kind == VerbKind::kRead ? "read" : "write";
      out += '\n';
    }
    return out;
  }

  std::size_t size() const noexcept { return verbs_.size(); }

  static constexpr std::string_view kDefaultText =
      "# Verb\tread|write\n"
      "Get\tread\n"
      "List\tread\n"
      "Describe\tread\n"
      "Head\tread\n"
      "Put\twrite\n"
      "Create\twrite\n"
      "Update\twrite\n"
      "Delete\twrite\n"
      "Modify\twrite\n"
      "Attach\twrite\n"
      "Detach\twrite\n";

 private:
  std::map<std::string, VerbKind> verbs_;
};

struct GeneralizedAction {
  ActionPattern pattern;
  // Level 3 was requested but the operation has no verb in the table, so the
  // exact action was returned instead.
  bool fallback = false;
};

inline GeneralizedAction generalize_action(
    const Action& action, ActionLevel target,
    const VerbTable& verbs = VerbTable::defaults()) {
  switch (target) {
    case ActionLevel::kFullAccess:
      throw InvalidRequestError(
          "level 1 cannot be derived from a single action");
    case ActionLevel::kService:
      return {ActionPattern::parse(action.service() + ":*"), false};
    case ActionLevel::kVerb:
      if (auto verb = verbs.verb_of(action.operation())) {
        return {ActionPattern::parse(action.service() + ":" + *verb + "*"),
                false};
      }
      return {ActionPattern::exact(action), true};
    case ActionLevel::kAction:
      return {ActionPattern::exact(action), false};
  }
  throw InvalidRequestError("unknown action level");
}

}  // namespace iamsim
