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

// Scenario file format.
//
//   {
//     "management_account": "100000000000",
//     "organization": {"name": "Root",
//                      "accounts": [{"id": "...", "name": "..."}],
//                      "children": [ <same shape> ]},
//     "users": [{"id": "...", "display_name": "...", "groups": ["..."]}],
//     "groups": [{"id": "...", "display_name": "..."}],
//     "permission_sets": [{"id": "...", "policies": {"<name>": <policy>}}],
//     "assignments": [{"user"|"group": "...", "account": "...",
//                      "permission_set": "..."}],
//     "resources": [{"arn": "...", "owner_account": "...",
//                    "policy": <policy>}],
//     "shares": [{"resource": "<arn>", "shared_with": ["..."]}]
//   }
//
// Policies are embedded verbatim in the policy grammar. Every key except
// "management_account" and "organization" may be omitted.

#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>

#include "iamsim/error.hpp"
#include "iamsim/organization.hpp"
#include "iamsim/policy.hpp"
#include "json.hpp"

namespace iamsim {

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ParseError(where + ": unknown field \"" + key + "\"");
    }
  }
}

inline std::string get_string(const nlohmann::json& j, const std::string& where,
                              const char* key, bool required = true) {
  if (!j.contains(key)) {
    if (required) throw ParseError(where + ": missing \"" + key + "\"");
    return {};
  }
  if (!j[key].is_string()) {
    throw ParseError(where + "." + key + ": expected a string");
  }
  return j[key].get<std::string>();
}

inline const nlohmann::json& get_array(const nlohmann::json& j,
                                       const std::string& where,
                                       const char* key) {
  static const nlohmann::json kEmpty = nlohmann::json::array();
  if (!j.contains(key)) return kEmpty;
  if (!j[key].is_array()) {
    throw ParseError(where + "." + key + ": expected a list");
  }
  return j[key];
}

inline std::vector<std::string> get_strings(const nlohmann::json& j,
                                            const std::string& where,
                                            const char* key) {
  std::vector<std::string> out;
  for (const auto& item : get_array(j, where, key)) {
    if (!item.is_string()) {
      throw ParseError(where + "." + key + ": entries must be strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

inline OrgUnit parse_ou(const nlohmann::json& j, const std::string& where) {
  check_keys(j, where, {"name", "accounts", "children"});
  OrgUnit ou;
  ou.name = get_string(j, where, "name");
  std::size_t i = 0;
  for (const auto& a : get_array(j, where, "accounts")) {
    std::string w = where + ".accounts[" + std::to_string(i++) + "]";
    check_keys(a, w, {"id", "name"});
    ou.accounts.push_back({get_string(a, w, "id"), get_string(a, w, "name")});
  }
  i = 0;
  for (const auto& c : get_array(j, where, "children")) {
    ou.children.push_back(
        parse_ou(c, where + ".children[" + std::to_string(i++) + "]"));
  }
  return ou;
}

inline nlohmann::ordered_json ou_to_json(const OrgUnit& ou) {
  nlohmann::ordered_json out;
  out["name"] = ou.name;
  out["accounts"] = nlohmann::ordered_json::array();
  for (const auto& a : ou.accounts) {
    out["accounts"].push_back({{"id", a.id}, {"name", a.name}});
  }
  out["children"] = nlohmann::ordered_json::array();
  for (const auto& c : ou.children) out["children"].push_back(ou_to_json(c));
  return out;
}

}  // namespace detail

// Decodes the scenario shape. Malformed structure throws ParseError; bad
// embedded policies are collected and reported together as a
// ValidationError. Referential checks happen in build_org.
inline Scenario scenario_from_json(const nlohmann::json& j) {
  using detail::get_array;
  using detail::get_string;
  detail::check_keys(j, "scenario",
                     {"management_account", "organization", "users", "groups",
                      "permission_sets", "assignments", "resources", "shares"});
  Scenario s;
  s.management_account = get_string(j, "scenario", "management_account");
  if (!j.contains("organization")) {
    throw ParseError("scenario: missing \"organization\"");
  }
  s.root = detail::parse_ou(j["organization"], "organization");

  std::vector<std::string> policy_errors;
  auto policy = [&](const nlohmann::json& p, const std::string& where,
                    std::string name) -> std::optional<PolicyDocument> {
    try {
      return parse_policy_json(p, std::move(name));
    } catch (const ParseError& e) {
      policy_errors.push_back(where + ": " + e.what());
      return std::nullopt;
    }
  };

  std::size_t i = 0;
  for (const auto& u : get_array(j, "scenario", "users")) {
    std::string w = "users[" + std::to_string(i++) + "]";
    detail::check_keys(u, w, {"id", "display_name", "groups"});
    s.users.push_back({get_string(u, w, "id"),
                       get_string(u, w, "display_name", false),
                       detail::get_strings(u, w, "groups")});
  }
  i = 0;
  for (const auto& g : get_array(j, "scenario", "groups")) {
    std::string w = "groups[" + std::to_string(i++) + "]";
    detail::check_keys(g, w, {"id", "display_name"});
    s.groups.push_back(
        {get_string(g, w, "id"), get_string(g, w, "display_name", false)});
  }
  i = 0;
  for (const auto& p : get_array(j, "scenario", "permission_sets")) {
    std::string w = "permission_sets[" + std::to_string(i++) + "]";
    detail::check_keys(p, w, {"id", "policies"});
    PermissionSet ps{get_string(p, w, "id"), {}};
    if (p.contains("policies")) {
      if (!p["policies"].is_object()) {
        throw ParseError(w + ".policies: expected an object of name -> policy");
      }
      for (const auto& [name, doc] : p["policies"].items()) {
        if (auto parsed = policy(doc, w + ".policies." + name, name)) {
          ps.policies.push_back(std::move(*parsed));
        }
      }
    }
    s.permission_sets.push_back(std::move(ps));
  }
  i = 0;
  for (const auto& a : get_array(j, "scenario", "assignments")) {
    std::string w = "assignments[" + std::to_string(i++) + "]";
    detail::check_keys(a, w, {"user", "group", "account", "permission_set"});
    if (a.contains("user") == a.contains("group")) {
      throw ParseError(w + ": exactly one of \"user\" or \"group\" is required");
    }
    Subject subject = a.contains("user")
                          ? Subject::user(get_string(a, w, "user"))
                          : Subject::group(get_string(a, w, "group"));
    s.assignments.push_back({std::move(subject), get_string(a, w, "account"),
                             get_string(a, w, "permission_set")});
  }
  i = 0;
  for (const auto& r : get_array(j, "scenario", "resources")) {
    std::string w = "resources[" + std::to_string(i++) + "]";
    detail::check_keys(r, w, {"arn", "owner_account", "policy"});
    Resource res{get_string(r, w, "arn"), get_string(r, w, "owner_account"),
                 std::nullopt};
    if (r.contains("policy")) res.policy = policy(r["policy"], w + ".policy", res.arn);
    s.resources.push_back(std::move(res));
  }
  i = 0;
  for (const auto& sh : get_array(j, "scenario", "shares")) {
    std::string w = "shares[" + std::to_string(i++) + "]";
    detail::check_keys(sh, w, {"resource", "shared_with"});
    auto with = detail::get_strings(sh, w, "shared_with");
    s.shares.push_back({get_string(sh, w, "resource"),
                        std::set<std::string>(with.begin(), with.end())});
  }
  if (!policy_errors.empty()) throw ValidationError(std::move(policy_errors));
  return s;
}

inline nlohmann::ordered_json scenario_to_json(const Scenario& s) {
  using OJ = nlohmann::ordered_json;
  OJ out;
  out["management_account"] = s.management_account;
  out["organization"] = detail::ou_to_json(s.root);
  out["users"] = OJ::array();
  for (const auto& u : s.users) {
    OJ x;
    x["id"] = u.id;
    x["display_name"] = u.display_name;
    x["groups"] = u.groups;
    out["users"].push_back(std::move(x));
  }
  out["groups"] = OJ::array();
  for (const auto& g : s.groups) {
    OJ x;
    x["id"] = g.id;
    x["display_name"] = g.display_name;
    out["groups"].push_back(std::move(x));
  }
  out["permission_sets"] = OJ::array();
  for (const auto& p : s.permission_sets) {
    OJ x;
    x["id"] = p.id;
    x["policies"] = OJ::object();
    for (const auto& doc : p.policies) x["policies"][doc.name] = policy_to_json(doc);
    out["permission_sets"].push_back(std::move(x));
  }
  out["assignments"] = OJ::array();
  for (const auto& a : s.assignments) {
    OJ x;
    x[a.subject.kind == SubjectKind::kUser ? "user" : "group"] = a.subject.id;
    x["account"] = a.account;
    x["permission_set"] = a.permission_set;
    out["assignments"].push_back(std::move(x));
  }
  out["resources"] = OJ::array();
  for (const auto& r : s.resources) {
    OJ x;
    x["arn"] = r.arn;
    x["owner_account"] = r.owner_account;
    if (r.policy) x["policy"] = policy_to_json(*r.policy);
    out["resources"].push_back(std::move(x));
  }
  out["shares"] = OJ::array();
  for (const auto& sh : s.shares) {
    OJ x;
    x["resource"] = sh.resource;
    x["shared_with"] = sh.shared_with;
    out["shares"].push_back(std::move(x));
  }
  return out;
}

inline Scenario parse_scenario(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed scenario JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open \"" + path + "\"");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("error reading \"" + path + "\"");
  return buf.str();
}

inline Organization load_org(const std::string& path) {
  return build_org(parse_scenario(read_file(path)));
}

inline std::string export_org(const Organization& org, int indent = 2) {
  return scenario_to_json(org.scenario()).dump(indent);
}

}  // namespace iamsim
