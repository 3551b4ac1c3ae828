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

// Policy documents: the JSON grammar, action and resource patterns,
// condition blocks, and the four-level action hierarchy.

#pragma once

#include <algorithm>
#include <compare>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iamsim/error.hpp"
#include "iamsim/glob.hpp"
#include "json.hpp"

namespace iamsim {

inline constexpr std::string_view kPolicyVersion = "2012-10-17";

enum class Effect { kAllow, kDeny };

inline std::string_view to_string(Effect e) {
  return e == Effect::kAllow ? "Allow" : "Deny";
}

inline Effect parse_effect(std::string_view text) {
  if (text == "Allow") return Effect::kAllow;
  if (text == "Deny") return Effect::kDeny;
  throw ParseError("effect must be \"Allow\" or \"Deny\", got \"" +
                   std::string(text) + "\"");
}

namespace detail {

inline bool is_service_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
}

inline bool is_operation_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9');
}

inline void check_service(std::string_view service, std::string_view whole) {
  if (service.empty() ||
      !std::all_of(service.begin(), service.end(), is_service_char)) {
    throw ParseError("invalid service in action \"" + std::string(whole) +
                     "\": expected a lowercase token");
  }
}

// Operation text with an optional single trailing '*'.
inline void check_operation(std::string_view op, std::string_view whole,
                            bool allow_star) {
  std::string_view body = op;
  if (allow_star && !body.empty() && body.back() == '*') {
    body.remove_suffix(1);
    if (body.empty()) return;
  }
  if (body.empty() ||
      !std::all_of(body.begin(), body.end(), is_operation_char)) {
    throw ParseError(
        "invalid operation in action \"" + std::string(whole) + "\"" +
        (allow_star ? ": '*' is only allowed in trailing position" : ""));
  }
}

}  // namespace detail

// A concrete `service:Operation` action. Never contains a wildcard.
class Action {
 public:
  static Action parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos ||
        text.find(':', colon + 1) != std::string_view::npos) {
      throw ParseError("action \"" + std::string(text) +
                       "\" must have the form service:Operation");
    }
    if (has_wildcard(text)) {
      throw ParseError("concrete action \"" + std::string(text) +
                       "\" must not contain '*'");
    }
    auto service = text.substr(0, colon);
    auto op = text.substr(colon + 1);
    detail::check_service(service, text);
    detail::check_operation(op, text, false);
    return Action(std::string(service), std::string(op));
  }

  const std::string& service() const noexcept { return service_; }
  const std::string& operation() const noexcept { return operation_; }
  std::string str() const { return service_ + ":" + operation_; }

  friend auto operator<=>(const Action&, const Action&) = default;

 private:
  Action(std::string service, std::string op)
      : service_(std::move(service)), operation_(std::move(op)) {}

  std::string service_;
  std::string operation_;
};

// `service:operation` with an optional trailing '*' in the operation, or
// `*` / `*:*` for every action of every service.
class ActionPattern {
 public:
  static ActionPattern parse(std::string_view text) {
    if (text == "*" || text == "*:*") return any();
    auto colon = text.find(':');
    if (colon == std::string_view::npos ||
        text.find(':', colon + 1) != std::string_view::npos) {
      throw ParseError("action \"" + std::string(text) +
                       "\" must have the form service:operation or *");
    }
    auto service = text.substr(0, colon);
    auto op = text.substr(colon + 1);
    if (has_wildcard(service)) {
      throw ParseError("action \"" + std::string(text) +
                       "\": service may only be a wildcard in *:*");
    }
    detail::check_service(service, text);
    detail::check_operation(op, text, true);
    return ActionPattern(std::string(service), std::string(op));
  }

  static ActionPattern any() { return ActionPattern("*", "*"); }

  static ActionPattern exact(const Action& a) {
    return ActionPattern(a.service(), a.operation());
  }

  bool is_any() const noexcept { return service_ == "*"; }
  const std::string& service() const noexcept { return service_; }
  const std::string& operation() const noexcept { return operation_; }
  std::string str() const { return service_ + ":" + operation_; }

  friend auto operator<=>(const ActionPattern&,
                          const ActionPattern&) = default;

 private:
  ActionPattern(std::string service, std::string op)
      : service_(std::move(service)), operation_(std::move(op)) {}

  std::string service_;
  std::string operation_;
};

// Operation part of an action pattern: exact, or prefix with a trailing '*'.
inline bool operation_matches(std::string_view pattern, std::string_view op) {
  if (!pattern.empty() && pattern.back() == '*') {
    pattern.remove_suffix(1);
    return op.substr(0, pattern.size()) == pattern;
  }
  return pattern == op;
}

inline bool action_matches(const ActionPattern& pattern, const Action& action) {
  if (pattern.is_any()) return true;
  return pattern.service() == action.service() &&
         operation_matches(pattern.operation(), action.operation());
}

// ARN glob; '*' may appear anywhere.
class ResourcePattern {
 public:
  static ResourcePattern parse(std::string_view text) {
    if (text.empty()) throw ParseError("resource pattern must be non-empty");
    return ResourcePattern(std::string(text));
  }

  const std::string& str() const noexcept { return pattern_; }

  friend auto operator<=>(const ResourcePattern&,
                          const ResourcePattern&) = default;

 private:
  explicit ResourcePattern(std::string p) : pattern_(std::move(p)) {}
  std::string pattern_;
};

inline bool resource_matches(const ResourcePattern& pattern,
                             std::string_view arn) {
  return glob_match(pattern.str(), arn);
}

enum class ConditionOperator { kStringEquals, kStringLike };

inline std::string_view to_string(ConditionOperator op) {
  return op == ConditionOperator::kStringEquals ? "StringEquals"
                                                : "StringLike";
}

inline ConditionOperator parse_condition_operator(std::string_view text) {
  if (text == "StringEquals") return ConditionOperator::kStringEquals;
  if (text == "StringLike") return ConditionOperator::kStringLike;
  throw ParseError("unsupported condition operator \"" + std::string(text) +
                   "\"");
}

using RequestContext = std::map<std::string, std::string, std::less<>>;

struct ConditionBlock {
  // operator -> context key -> accepted values
  std::map<ConditionOperator, std::map<std::string, std::vector<std::string>>>
      clauses;

  bool empty() const noexcept { return clauses.empty(); }
  friend bool operator==(const ConditionBlock&,
                         const ConditionBlock&) = default;
};

inline bool condition_holds(const ConditionBlock& block,
                            const RequestContext& context) {
  for (const auto& [op, keys] : block.clauses) {
    for (const auto& [key, values] : keys) {
      auto it = context.find(key);
      if (it == context.end()) return false;
      const std::string& actual = it->second;
      bool any = std::any_of(values.begin(), values.end(), [&](const auto& v) {
        return op == ConditionOperator::kStringEquals ? v == actual
                                                      : glob_match(v, actual);
      });
      if (!any) return false;
    }
  }
  return true;
}

struct Statement {
  Effect effect = Effect::kAllow;
  std::vector<ActionPattern> actions;
  std::vector<ResourcePattern> resources;
  ConditionBlock condition;
  // Present only in resource-based policies. Each entry is a user id or an
  // account id.
  std::optional<std::vector<std::string>> principals;

  friend bool operator==(const Statement&, const Statement&) = default;
};

struct PolicyDocument {
  std::string name;
  std::vector<Statement> statements;

  friend bool operator==(const PolicyDocument&,
                         const PolicyDocument&) = default;
};

// Specificity tiers, ordered from broadest to narrowest.
enum class ActionLevel : int {
  kFullAccess = 1,  // *:*
  kService = 2,     // service:*
  kVerb = 3,        // service:Verb*
  kAction = 4,      // service:Operation
};

inline ActionLevel action_level_from_int(int level) {
  if (level < 1 || level > 4) {
    throw InvalidRequestError("action level must be 1..4, got " +
                              std::to_string(level));
  }
  return static_cast<ActionLevel>(level);
}

inline int to_int(ActionLevel level) { return static_cast<int>(level); }

inline ActionLevel classify_action_level(const ActionPattern& pattern) {
  if (pattern.is_any()) return ActionLevel::kFullAccess;
  const std::string& op = pattern.operation();
  if (op == "*") return ActionLevel::kService;
  if (op.back() == '*') return ActionLevel::kVerb;
  return ActionLevel::kAction;
}

// ---------------------------------------------------------------------------
// JSON grammar

namespace detail {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline std::vector<std::string> string_or_list(const Json& v,
                                               const std::string& where) {
  std::vector<std::string> out;
  if (v.is_string()) {
    out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& item : v) {
      if (!item.is_string()) {
        throw ParseError(where + ": list entries must be strings");
      }
      out.push_back(item.get<std::string>());
    }
  } else {
    throw ParseError(where + ": expected a string or a list of strings");
  }
  if (out.empty()) throw ParseError(where + ": list must be non-empty");
  return out;
}

inline Statement parse_statement(const Json& j, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": statement must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "Effect" && key != "Action" && key != "Resource" &&
        key != "Condition" && key != "Principal") {
      throw ParseError(where + ": unsupported statement field \"" + key +
                       "\"");
    }
  }
  for (const char* required : {"Effect", "Action", "Resource"}) {
    if (!j.contains(required)) {
      throw ParseError(where + ": missing \"" + required + "\"");
    }
  }
  Statement st;
  if (!j["Effect"].is_string()) {
    throw ParseError(where + ".Effect: expected a string");
  }
  try {
    st.effect = parse_effect(j["Effect"].get<std::string>());
  } catch (const ParseError& e) {
    throw ParseError(where + ".Effect: " + e.what());
  }
  for (const auto& a : string_or_list(j["Action"], where + ".Action")) {
    try {
      st.actions.push_back(ActionPattern::parse(a));
    } catch (const ParseError& e) {
      throw ParseError(where + ".Action: " + e.what());
    }
  }
  for (const auto& r : string_or_list(j["Resource"], where + ".Resource")) {
    st.resources.push_back(ResourcePattern::parse(r));
  }
  if (j.contains("Condition")) {
    const Json& c = j["Condition"];
    if (!c.is_object()) {
      throw ParseError(where + ".Condition: expected an object");
    }
    for (const auto& [op_name, keys] : c.items()) {
      ConditionOperator op;
      try {
        op = parse_condition_operator(op_name);
      } catch (const ParseError& e) {
        throw ParseError(where + ".Condition: " + e.what());
      }
      if (!keys.is_object()) {
        throw ParseError(where + ".Condition." + op_name +
                         ": expected an object");
      }
      auto& clause = st.condition.clauses[op];
      for (const auto& [key, values] : keys.items()) {
        clause[key] =
            string_or_list(values, where + ".Condition." + op_name + "." + key);
      }
    }
  }
  if (j.contains("Principal")) {
    const Json& p = j["Principal"];
    if (!p.is_object() || p.size() != 1 || !p.contains("AWS")) {
      throw ParseError(where +
                       ".Principal: expected an object with a single \"AWS\" "
                       "key");
    }
    auto refs = string_or_list(p["AWS"], where + ".Principal.AWS");
    for (const auto& r : refs) {
      if (r.empty() || has_wildcard(r)) {
        throw ParseError(where + ".Principal.AWS: principal \"" + r +
                         "\" must be a user id or an account id");
      }
    }
    st.principals = std::move(refs);
  }
  return st;
}

template <typename T, typename F>
OrderedJson string_or_list_json(const std::vector<T>& items, F&& to_str) {
  if (items.size() == 1) return OrderedJson(to_str(items.front()));
  OrderedJson arr = OrderedJson::array();
  for (const auto& item : items) arr.push_back(to_str(item));
  return arr;
}

}  // namespace detail

// Parses an already-decoded JSON value in the policy grammar.
inline PolicyDocument parse_policy_json(const nlohmann::json& j,
                                        std::string name = {}) {
  if (!j.is_object()) throw ParseError("policy document must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "Version" && key != "Statement") {
      throw ParseError("unknown top-level policy field \"" + key + "\"");
    }
  }
  if (!j.contains("Version") || !j["Version"].is_string() ||
      j["Version"].get<std::string>() != kPolicyVersion) {
    throw ParseError("policy Version must be \"" + std::string(kPolicyVersion) +
                     "\"");
  }
  if (!j.contains("Statement") || !j["Statement"].is_array()) {
    throw ParseError("policy Statement must be a list");
  }
  PolicyDocument doc;
  doc.name = std::move(name);
  std::size_t i = 0;
  for (const auto& s : j["Statement"]) {
    doc.statements.push_back(
        detail::parse_statement(s, "Statement[" + std::to_string(i++) + "]"));
  }
  return doc;
}

inline PolicyDocument parse_policy(std::string_view text,
                                   std::string name = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed policy JSON: ") + e.what());
  }
  return parse_policy_json(j, std::move(name));
}

// Canonical key order: Version, Statement; Effect, Principal, Action,
// Resource, Condition. Single-element lists are written in string form.
inline nlohmann::ordered_json policy_to_json(const PolicyDocument& doc) {
  using detail::OrderedJson;
  OrderedJson out;
  out["Version"] = kPolicyVersion;
  out["Statement"] = OrderedJson::array();
  for (const auto& st : doc.statements) {
    OrderedJson s;
    s["Effect"] = to_string(st.effect);
    if (st.principals) {
      OrderedJson p;
      p["AWS"] = detail::string_or_list_json(
          *st.principals, [](const std::string& r) { return r; });
      s["Principal"] = std::move(p);
    }
    s["Action"] = detail::string_or_list_json(
        st.actions, [](const ActionPattern& a) { return a.str(); });
    s["Resource"] = detail::string_or_list_json(
        st.resources, [](const ResourcePattern& r) { return r.str(); });
    if (!st.condition.empty()) {
      OrderedJson c;
      for (const auto& [op, keys] : st.condition.clauses) {
        OrderedJson clause = OrderedJson::object();
        for (const auto& [key, values] : keys) {
          clause[key] = detail::string_or_list_json(
              values, [](const std::string& v) { return v; });
        }
        c[std::string(to_string(op))] = std::move(clause);
      }
      s["Condition"] = std::move(c);
    }
    out["Statement"].push_back(std::move(s));
  }
  return out;
}

// Compact by default; `indent >= 0` pretty-prints.
inline std::string serialize_policy(const PolicyDocument& doc,
                                    int indent = -1) {
  return policy_to_json(doc).dump(indent);
}

}  // namespace iamsim
