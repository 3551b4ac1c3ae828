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

// The organization: OU tree, accounts, SSO users and groups, permission
// sets and their assignments, registered resources and resource shares.
//
// A `Scenario` is the plain, editable description. `build_org` validates a
// scenario and produces an immutable `Organization` with lookup indexes.
// Updates never mutate an organization in place: copy its scenario, edit
// the copy, and build again.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iamsim/error.hpp"
#include "iamsim/policy.hpp"
#include "json.hpp"

namespace iamsim {

struct Account {
  std::string id;
  std::string name;

  friend auto operator<=>(const Account&, const Account&) = default;
};

struct OrgUnit {
  std::string name;
  std::vector<OrgUnit> children;
  std::vector<Account> accounts;

  friend bool operator==(const OrgUnit&, const OrgUnit&) = default;
};

struct SsoUser {
  std::string id;
  std::string display_name;
  std::vector<std::string> groups;

  friend bool operator==(const SsoUser&, const SsoUser&) = default;
};

struct SsoGroup {
  std::string id;
  std::string display_name;

  friend bool operator==(const SsoGroup&, const SsoGroup&) = default;
};

// Identity-based policies only; kept sorted by policy name.
struct PermissionSet {
  std::string id;
  std::vector<PolicyDocument> policies;

  friend bool operator==(const PermissionSet&, const PermissionSet&) = default;
};

enum class SubjectKind { kUser, kGroup };

struct Subject {
  SubjectKind kind = SubjectKind::kUser;
  std::string id;

  static Subject user(std::string id) { return {SubjectKind::kUser, std::move(id)}; }
  static Subject group(std::string id) { return {SubjectKind::kGroup, std::move(id)}; }

  friend auto operator<=>(const Subject&, const Subject&) = default;
};

struct Assignment {
  Subject subject;
  std::string account;
  std::string permission_set;

  friend auto operator<=>(const Assignment&, const Assignment&) = default;
};

struct Resource {
  std::string arn;
  std::string owner_account;
  // Statements carry principals.
  std::optional<PolicyDocument> policy;

  friend bool operator==(const Resource&, const Resource&) = default;
};

struct ResourceShare {
  std::string resource;
  std::set<std::string> shared_with;

  friend bool operator==(const ResourceShare&, const ResourceShare&) = default;
};

struct Scenario {
  std::string management_account;
  OrgUnit root{"Root", {}, {}};
  std::vector<SsoUser> users;
  std::vector<SsoGroup> groups;
  std::vector<PermissionSet> permission_sets;
  std::vector<Assignment> assignments;
  std::vector<Resource> resources;
  std::vector<ResourceShare> shares;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

class Organization;
Organization build_org(Scenario scenario);

class Organization {
 public:
  // Canonical scenario: collections sorted by id, OU tree in document order.
  const Scenario& scenario() const noexcept { return scenario_; }

  const std::string& management_account() const noexcept {
    return scenario_.management_account;
  }
  const OrgUnit& root() const noexcept { return scenario_.root; }

  bool has_account(std::string_view id) const {
    return accounts_.find(id) != accounts_.end();
  }
  const Account* find_account(std::string_view id) const {
    auto it = accounts_.find(id);
    return it == accounts_.end() ? nullptr : &it->second;
  }
  const SsoUser* find_user(std::string_view id) const {
    auto it = users_.find(id);
    return it == users_.end() ? nullptr : it->second;
  }
  const SsoGroup* find_group(std::string_view id) const {
    auto it = groups_.find(id);
    return it == groups_.end() ? nullptr : it->second;
  }
  const PermissionSet* find_permission_set(std::string_view id) const {
    auto it = permission_sets_.find(id);
    return it == permission_sets_.end() ? nullptr : it->second;
  }
  const Resource* find_resource(std::string_view arn) const {
    auto it = resources_.find(arn);
    return it == resources_.end() ? nullptr : it->second;
  }
  const ResourceShare* find_share(std::string_view arn) const {
    auto it = shares_.find(arn);
    return it == shares_.end() ? nullptr : it->second;
  }

  // Account ids in ascending order.
  std::vector<std::string> account_ids() const {
    std::vector<std::string> out;
    out.reserve(accounts_.size());
    for (const auto& [id, _] : accounts_) out.push_back(id);
    return out;
  }

  const std::vector<const Assignment*>& assignments_for_account(
      std::string_view account) const {
    static const std::vector<const Assignment*> kNone;
    auto it = assignments_by_account_.find(account);
    return it == assignments_by_account_.end() ? kNone : it->second;
  }

  friend bool operator==(const Organization& a, const Organization& b) {
    return a.scenario_ == b.scenario_;
  }

 private:
  friend Organization build_org(Scenario scenario);

  Organization() = default;

 public:
  // Indexes point into the owned scenario, so copies rebuild them. Moves
  // keep element addresses and need no reindexing.
  Organization(const Organization& other) : scenario_(other.scenario_) {
    reindex();
  }
  Organization& operator=(const Organization& other) {
    if (this != &other) {
      scenario_ = other.scenario_;
      reindex();
    }
    return *this;
  }
  Organization(Organization&&) = default;
  Organization& operator=(Organization&&) = default;

 private:
  void reindex() {
    accounts_.clear();
    users_.clear();
    groups_.clear();
    permission_sets_.clear();
    resources_.clear();
    shares_.clear();
    assignments_by_account_.clear();
    std::function<void(const OrgUnit&)> walk = [&](const OrgUnit& ou) {
      for (const auto& a : ou.accounts) accounts_.emplace(a.id, a);
      for (const auto& c : ou.children) walk(c);
    };
    walk(scenario_.root);
    for (const auto& u : scenario_.users) users_.emplace(u.id, &u);
    for (const auto& g : scenario_.groups) groups_.emplace(g.id, &g);
    for (const auto& p : scenario_.permission_sets) {
      permission_sets_.emplace(p.id, &p);
    }
    for (const auto& r : scenario_.resources) resources_.emplace(r.arn, &r);
    for (const auto& s : scenario_.shares) shares_.emplace(s.resource, &s);
    for (const auto& a : scenario_.assignments) {
      assignments_by_account_[a.account].push_back(&a);
    }
  }

  Scenario scenario_;
  std::map<std::string, Account, std::less<>> accounts_;
  std::map<std::string, const SsoUser*, std::less<>> users_;
  std::map<std::string, const SsoGroup*, std::less<>> groups_;
  std::map<std::string, const PermissionSet*, std::less<>> permission_sets_;
  std::map<std::string, const Resource*, std::less<>> resources_;
  std::map<std::string, const ResourceShare*, std::less<>> shares_;
  std::map<std::string, std::vector<const Assignment*>, std::less<>>
      assignments_by_account_;
};

namespace detail {

inline bool valid_id(std::string_view id) {
  return !id.empty() && !has_wildcard(id) &&
         std::none_of(id.begin(), id.end(), [](char c) {
           return c == ' ' || c == '\t' || c == '\n' || c == ':' || c == '/';
         });
}

// Account segment of `arn:partition:service:region:account:resource`, if the
// string has that shape.
inline std::optional<std::string> arn_account(std::string_view arn) {
  if (arn.substr(0, 4) != "arn:") return std::nullopt;
  std::size_t pos = 0;
  for (int field = 0; field < 4; ++field) {
    pos = arn.find(':', pos);
    if (pos == std::string_view::npos) return std::nullopt;
    ++pos;
  }
  auto end = arn.find(':', pos);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(arn.substr(pos, end - pos));
}

inline std::string describe(const Assignment& a) {
  return std::string(a.subject.kind == SubjectKind::kUser ? "user " : "group ") +
         a.subject.id + " / account " + a.account + " / permission set " +
         a.permission_set;
}

inline void canonicalize(Scenario& s) {
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::stable_sort(s.users.begin(), s.users.end(), by_id);
  for (auto& u : s.users) {
    std::sort(u.groups.begin(), u.groups.end());
  }
  std::stable_sort(s.groups.begin(), s.groups.end(), by_id);
  std::stable_sort(s.permission_sets.begin(), s.permission_sets.end(), by_id);
  for (auto& p : s.permission_sets) {
    std::stable_sort(
        p.policies.begin(), p.policies.end(),
        [](const auto& a, const auto& b) { return a.name < b.name; });
  }
  std::stable_sort(s.assignments.begin(), s.assignments.end());
  std::stable_sort(
      s.resources.begin(), s.resources.end(),
      [](const auto& a, const auto& b) { return a.arn < b.arn; });
  std::stable_sort(
      s.shares.begin(), s.shares.end(),
      [](const auto& a, const auto& b) { return a.resource < b.resource; });
}

inline std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> v;

  std::map<std::string, std::string> account_home;  // id -> OU path
  std::set<std::string> account_names;
  std::function<void(const OrgUnit&, const std::string&)> walk =
      [&](const OrgUnit& ou, const std::string& path) {
        std::set<std::string> child_names;
        for (const auto& c : ou.children) {
          if (c.name.empty() || c.name.find('/') != std::string::npos) {
            v.push_back("OU name \"" + c.name + "\" under \"" + path +
                        "\" must be non-empty and contain no '/'");
          }
          if (!child_names.insert(c.name).second) {
            v.push_back("duplicate OU name \"" + c.name + "\" under \"" +
                        path + "\"");
          }
        }
        for (const auto& a : ou.accounts) {
          if (!valid_id(a.id)) {
            v.push_back("invalid account id \"" + a.id + "\"");
          }
          auto [it, fresh] = account_home.emplace(a.id, path);
          if (!fresh) {
            v.push_back("account " + a.id + " appears in OU \"" + it->second +
                        "\" and in OU \"" + path + "\"");
          }
          if (a.name.empty()) {
            v.push_back("account " + a.id + " has an empty name");
          } else if (!account_names.insert(a.name).second) {
            v.push_back("duplicate account name \"" + a.name + "\"");
          }
        }
        for (const auto& c : ou.children) {
          walk(c, path == "/" ? "/" + c.name : path + "/" + c.name);
        }
      };
  walk(s.root, "/");

  if (!account_home.count(s.management_account)) {
    v.push_back("management account \"" + s.management_account +
                "\" is not in the OU tree");
  }

  std::set<std::string> group_ids;
  for (const auto& g : s.groups) {
    if (!valid_id(g.id)) v.push_back("invalid group id \"" + g.id + "\"");
    if (!group_ids.insert(g.id).second) {
      v.push_back("duplicate group id \"" + g.id + "\"");
    }
  }
  std::set<std::string> user_ids;
  for (const auto& u : s.users) {
    if (!valid_id(u.id)) v.push_back("invalid user id \"" + u.id + "\"");
    if (!user_ids.insert(u.id).second) {
      v.push_back("duplicate user id \"" + u.id + "\"");
    }
    if (account_home.count(u.id)) {
      v.push_back("user id \"" + u.id + "\" collides with an account id");
    }
    std::set<std::string> seen;
    for (const auto& g : u.groups) {
      if (!group_ids.count(g)) {
        v.push_back("user " + u.id + " is a member of unknown group \"" + g +
                    "\"");
      }
      if (!seen.insert(g).second) {
        v.push_back("user " + u.id + " lists group \"" + g + "\" twice");
      }
    }
  }

  std::set<std::string> ps_ids;
  for (const auto& p : s.permission_sets) {
    if (!valid_id(p.id)) {
      v.push_back("invalid permission set id \"" + p.id + "\"");
    }
    if (!ps_ids.insert(p.id).second) {
      v.push_back("duplicate permission set id \"" + p.id + "\"");
    }
    std::set<std::string> names;
    for (const auto& doc : p.policies) {
      if (doc.name.empty()) {
        v.push_back("permission set " + p.id + " has an unnamed policy");
      } else if (!names.insert(doc.name).second) {
        v.push_back("permission set " + p.id + " has two policies named \"" +
                    doc.name + "\"");
      }
      for (std::size_t i = 0; i < doc.statements.size(); ++i) {
        if (doc.statements[i].principals) {
          v.push_back("permission set " + p.id + " policy " + doc.name +
                      " statement " + std::to_string(i) +
                      " has a Principal; identity-based policies must not");
        }
      }
    }
  }

  std::set<Assignment> seen_assignments;
  for (const auto& a : s.assignments) {
    bool subject_ok = a.subject.kind == SubjectKind::kUser
                          ? user_ids.count(a.subject.id) > 0
                          : group_ids.count(a.subject.id) > 0;
    if (!subject_ok) {
      v.push_back("assignment (" + describe(a) + ") references unknown " +
                  (a.subject.kind == SubjectKind::kUser ? "user" : "group"));
    }
    if (!account_home.count(a.account)) {
      v.push_back("assignment (" + describe(a) + ") references unknown account");
    }
    if (!ps_ids.count(a.permission_set)) {
      v.push_back("assignment (" + describe(a) +
                  ") references unknown permission set");
    }
    if (!seen_assignments.insert(a).second) {
      v.push_back("duplicate assignment (" + describe(a) + ")");
    }
  }

  std::map<std::string, std::string> owners;
  for (const auto& r : s.resources) {
    if (r.arn.empty() || has_wildcard(r.arn)) {
      v.push_back("resource arn \"" + r.arn +
                  "\" must be non-empty and contain no '*'");
    }
    if (!owners.emplace(r.arn, r.owner_account).second) {
      v.push_back("duplicate resource arn \"" + r.arn + "\"");
    }
    if (!account_home.count(r.owner_account)) {
      v.push_back("resource " + r.arn + " is owned by unknown account \"" +
                  r.owner_account + "\"");
    }
    if (auto acct = arn_account(r.arn); acct && !acct->empty() &&
                                         *acct != r.owner_account) {
      v.push_back("resource " + r.arn + " names account " + *acct +
                  " but is owned by " + r.owner_account);
    }
    if (r.policy) {
      for (std::size_t i = 0; i < r.policy->statements.size(); ++i) {
        if (!r.policy->statements[i].principals) {
          v.push_back("resource " + r.arn + " policy statement " +
                      std::to_string(i) + " has no Principal");
        }
      }
    }
  }

  std::set<std::string> shared;
  for (const auto& sh : s.shares) {
    if (!shared.insert(sh.resource).second) {
      v.push_back("resource " + sh.resource + " is shared twice");
    }
    auto owner = owners.find(sh.resource);
    if (owner == owners.end()) {
      v.push_back("share references unknown resource \"" + sh.resource + "\"");
    }
    if (sh.shared_with.empty()) {
      v.push_back("share of " + sh.resource + " lists no accounts");
    }
    for (const auto& acct : sh.shared_with) {
      if (!account_home.count(acct)) {
        v.push_back("share of " + sh.resource + " lists unknown account \"" +
                    acct + "\"");
      }
      if (owner != owners.end() && acct == owner->second) {
        v.push_back("share of " + sh.resource +
                    " lists its owner account " + acct);
      }
    }
  }
  return v;
}

inline const OrgUnit* find_ou(const OrgUnit& root, std::string_view path) {
  const OrgUnit* node = &root;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    auto slash = path.find('/');
    auto name = path.substr(0, slash);
    auto it = std::find_if(node->children.begin(), node->children.end(),
                           [&](const OrgUnit& c) { return c.name == name; });
    if (it == node->children.end()) return nullptr;
    node = &*it;
    path = slash == std::string_view::npos ? std::string_view{}
                                           : path.substr(slash + 1);
  }
  return node;
}

inline OrgUnit* find_ou(OrgUnit& root, std::string_view path) {
  return const_cast<OrgUnit*>(find_ou(static_cast<const OrgUnit&>(root), path));
}

}  // namespace detail

// Validates `scenario` and returns the organization. Throws ValidationError
// listing every violated invariant.
inline Organization build_org(Scenario scenario) {
  auto violations = detail::validate(scenario);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  detail::canonicalize(scenario);
  Organization org;
  org.scenario_ = std::move(scenario);
  org.reindex();
  return org;
}

// OU paths are '/'-separated names below the root; "" and "/" denote the
// root itself.
inline std::vector<std::string> accounts_in_subtree(const Organization& org,
                                                    std::string_view ou_path) {
  const OrgUnit* ou = detail::find_ou(org.root(), ou_path);
  if (!ou) throw NotFoundError("unknown OU \"" + std::string(ou_path) + "\"");
  std::vector<std::string> out;
  std::function<void(const OrgUnit&)> walk = [&](const OrgUnit& node) {
    for (const auto& a : node.accounts) out.push_back(a.id);
    for (const auto& c : node.children) walk(c);
  };
  walk(*ou);
  return out;
}

// Returns a new organization with account `name` added under `ou_path`. The
// fresh id is one past the largest 12-digit numeric account id.
inline Organization provision_account(const Organization& org,
                                      std::string_view name,
                                      std::string_view ou_path) {
  Scenario next = org.scenario();
  OrgUnit* ou = detail::find_ou(next.root, ou_path);
  if (!ou) throw NotFoundError("unknown OU \"" + std::string(ou_path) + "\"");
  std::uint64_t max_id = 99999999999;  // first fresh id is 100000000000
  for (const auto& id : org.account_ids()) {
    if (id.size() == 12 && std::all_of(id.begin(), id.end(), ::isdigit)) {
      max_id = std::max<std::uint64_t>(max_id, std::stoull(id));
    }
  }
  if (max_id >= 999999999999ULL) {
    throw InvalidRequestError("account id space exhausted");
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%012llu",
                static_cast<unsigned long long>(max_id + 1));
  for (const auto& id : org.account_ids()) {
    if (org.find_account(id)->name == name) {
      throw InvalidRequestError("account name \"" + std::string(name) +
                                "\" is already in use");
    }
  }
  ou->accounts.push_back({buf, std::string(name)});
  return build_org(std::move(next));
}

// Permission sets granted to `user_id` in `account_id`, directly or through
// any of the user's groups. Deduplicated, ascending by id.
inline std::vector<const PermissionSet*> resolve_permission_sets(
    const Organization& org, std::string_view user_id,
    std::string_view account_id) {
  const SsoUser* user = org.find_user(user_id);
  if (!user) throw NotFoundError("unknown user \"" + std::string(user_id) + "\"");
  if (!org.has_account(account_id)) {
    throw NotFoundError("unknown account \"" + std::string(account_id) + "\"");
  }
  std::set<std::string_view> ids;
  for (const Assignment* a : org.assignments_for_account(account_id)) {
    bool applies =
        a->subject.kind == SubjectKind::kUser
            ? a->subject.id == user->id
            : std::binary_search(user->groups.begin(), user->groups.end(),
                                 a->subject.id);
    if (applies) ids.insert(a->permission_set);
  }
  std::vector<const PermissionSet*> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(org.find_permission_set(id));
  return out;
}

inline std::vector<PolicyDocument> resolve_identity_policies(
    const Organization& org, std::string_view user_id,
    std::string_view account_id) {
  std::vector<PolicyDocument> out;
  for (const PermissionSet* ps :
       resolve_permission_sets(org, user_id, account_id)) {
    out.insert(out.end(), ps->policies.begin(), ps->policies.end());
  }
  return out;
}

inline const Resource& resource_lookup(const Organization& org,
                                       std::string_view arn) {
  const Resource* r = org.find_resource(arn);
  if (!r) throw NotFoundError("unknown resource \"" + std::string(arn) + "\"");
  return *r;
}

inline bool shares_covering(const Organization& org, std::string_view arn,
                            std::string_view account_id) {
  const ResourceShare* s = org.find_share(arn);
  return s && s->shared_with.count(std::string(account_id)) > 0;
}

}  // namespace iamsim
