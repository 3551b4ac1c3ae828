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

// Seeded generators for property and differential tests.

#pragma once

#include <cstdint>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "iamsim/audit.hpp"
#include "iamsim/engine.hpp"
#include "iamsim/organization.hpp"
#include "iamsim/policy.hpp"

namespace iamsim::testing {

using Rng = std::mt19937_64;

inline std::size_t pick(Rng& rng, std::size_t n) { return rng() % n; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[pick(rng, v.size())];
}

inline bool chance(Rng& rng, double p) {
  return double(rng() % 1000000) < p * 1000000.0;
}

inline std::string account_id(int i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "1000000000%02d", i);
  return buf;
}

inline const std::vector<std::string>& concrete_actions() {
  static const std::vector<std::string> kActions = {
      "s3:GetObject",        "s3:PutObject",       "s3:DeleteObject",
      "s3:ListBucket",       "ec2:DescribeInstances", "ec2:RunInstances",
      "ec2:TerminateInstances", "dynamodb:GetItem", "dynamodb:PutItem",
      "acm:DescribeCertificate", "acm:RequestCertificate", "iam:GetRole",
  };
  return kActions;
}

inline const std::vector<std::string>& action_patterns() {
  static const std::vector<std::string> kPatterns = {
      "*",           "s3:*",         "s3:Get*",     "s3:Put*",
      "s3:GetObject", "s3:DeleteObject", "ec2:*",   "ec2:Describe*",
      "ec2:RunInstances", "dynamodb:*", "dynamodb:PutItem", "acm:*",
      "acm:Describe*", "iam:Get*",   "s3:G*",      "ec2:Run*",
  };
  return kPatterns;
}

struct UniverseSpec {
  int accounts = 3;
  int users = 4;
  int groups = 2;
  int permission_sets = 3;
  int max_statements = 6;
  int resources = 3;
  int assignments = 8;
  double deny_prob = 0.2;
  double condition_prob = 0.2;
  double resource_policy_prob = 0.6;
  double share_prob = 0.3;
};

struct Universe {
  Scenario scenario;
  std::vector<std::string> accounts;
  std::vector<std::string> users;
  std::vector<std::string> registered;    // resource arns in the registry
  std::vector<std::string> unregistered;  // arns requests may use anyway
};

inline std::string resource_arn(int i, const std::string& owner) {
  switch (i % 3) {
    case 0: return "arn:aws:s3:::bucket-" + std::to_string(i);
    case 1:
      return "arn:aws:dynamodb:ap-northeast-2:" + owner + ":table/T" +
             std::to_string(i);
    default:
      return "arn:aws:ec2:ap-northeast-2:" + owner + ":instance/i-" +
             std::to_string(i);
  }
}

inline std::vector<std::string> resource_patterns_for(
    const std::vector<std::string>& arns) {
  std::vector<std::string> out = {"*", "arn:aws:s3:::bucket-*",
                                  "arn:aws:dynamodb:*:*:table/*",
                                  "arn:aws:ec2:*"};
  out.insert(out.end(), arns.begin(), arns.end());
  return out;
}

inline ConditionBlock random_condition(Rng& rng) {
  static const std::vector<std::string> kKeys = {"env", "team"};
  static const std::vector<std::string> kValues = {"prod", "dev", "red", "blue"};
  static const std::vector<std::string> kGlobs = {"p*", "*e*", "dev", "*"};
  ConditionBlock c;
  if (chance(rng, 0.5)) {
    c.clauses[ConditionOperator::kStringEquals][pick(rng, kKeys)] = {
        pick(rng, kValues)};
  } else {
    c.clauses[ConditionOperator::kStringLike][pick(rng, kKeys)] = {
        pick(rng, kGlobs)};
  }
  return c;
}

inline Statement random_statement(Rng& rng, const UniverseSpec& spec,
                                  const std::vector<std::string>& resource_pool) {
  Statement st;
  st.effect = chance(rng, spec.deny_prob) ? Effect::kDeny : Effect::kAllow;
  int na = 1 + int(pick(rng, 2));
  for (int i = 0; i < na; ++i) {
    st.actions.push_back(ActionPattern::parse(pick(rng, action_patterns())));
  }
  int nr = 1 + int(pick(rng, 2));
  for (int i = 0; i < nr; ++i) {
    st.resources.push_back(ResourcePattern::parse(pick(rng, resource_pool)));
  }
  if (chance(rng, spec.condition_prob)) st.condition = random_condition(rng);
  return st;
}

inline Universe random_universe(Rng& rng, const UniverseSpec& spec) {
  Universe u;
  Scenario& s = u.scenario;
  s.root.name = "Root";
  for (int i = 0; i < spec.accounts; ++i) u.accounts.push_back(account_id(i));
  s.management_account = u.accounts.front();
  s.root.accounts.push_back({u.accounts.front(), "acct-0"});
  OrgUnit workloads{"Workloads", {}, {}};
  for (int i = 1; i < spec.accounts; ++i) {
    workloads.accounts.push_back({u.accounts[i], "acct-" + std::to_string(i)});
  }
  s.root.children.push_back(std::move(workloads));

  for (int g = 0; g < spec.groups; ++g) {
    s.groups.push_back({"g" + std::to_string(g), ""});
  }
  for (int i = 0; i < spec.users; ++i) {
    SsoUser user{"u" + std::to_string(i), "", {}};
    for (int g = 0; g < spec.groups; ++g) {
      if (chance(rng, 0.4)) user.groups.push_back("g" + std::to_string(g));
    }
    u.users.push_back(user.id);
    s.users.push_back(std::move(user));
  }

  for (int r = 0; r < spec.resources; ++r) {
    const std::string& owner = pick(rng, u.accounts);
    u.registered.push_back(resource_arn(r, owner));
  }
  for (int r = spec.resources; r < spec.resources + 2; ++r) {
    u.unregistered.push_back(resource_arn(r, pick(rng, u.accounts)));
  }
  const auto pool = resource_patterns_for(u.registered);

  for (int p = 0; p < spec.permission_sets; ++p) {
    PermissionSet ps{"ps" + std::to_string(p), {}};
    int npol = 1 + int(pick(rng, 2));
    for (int k = 0; k < npol; ++k) {
      PolicyDocument doc{"pol" + std::to_string(k), {}};
      int ns = 1 + int(pick(rng, std::size_t(spec.max_statements)));
      for (int i = 0; i < ns; ++i) {
        doc.statements.push_back(random_statement(rng, spec, pool));
      }
      ps.policies.push_back(std::move(doc));
    }
    s.permission_sets.push_back(std::move(ps));
  }

  std::set<Assignment> assignments;
  for (int i = 0; i < spec.assignments; ++i) {
    Subject subject = (spec.groups > 0 && chance(rng, 0.4))
                          ? Subject::group("g" + std::to_string(pick(rng, spec.groups)))
                          : Subject::user(pick(rng, u.users));
    assignments.insert({subject, pick(rng, u.accounts),
                        "ps" + std::to_string(pick(rng, spec.permission_sets))});
  }
  s.assignments.assign(assignments.begin(), assignments.end());

  for (int r = 0; r < spec.resources; ++r) {
    const std::string& arn = u.registered[r];
    std::string owner;
    // Recover the owner chosen above from the arn when it embeds one.
    if (auto acct = detail::arn_account(arn); acct && !acct->empty()) {
      owner = *acct;
    } else {
      owner = pick(rng, u.accounts);
    }
    Resource res{arn, owner, std::nullopt};
    if (chance(rng, spec.resource_policy_prob)) {
      PolicyDocument doc{arn, {}};
      int ns = 1 + int(pick(rng, 2));
      for (int i = 0; i < ns; ++i) {
        Statement st = random_statement(rng, spec, pool);
        std::vector<std::string> principals;
        int np = 1 + int(pick(rng, 2));
        for (int k = 0; k < np; ++k) {
          principals.push_back(chance(rng, 0.5) ? pick(rng, u.users)
                                                : pick(rng, u.accounts));
        }
        st.principals = principals;
        doc.statements.push_back(std::move(st));
      }
      res.policy = std::move(doc);
    }
    if (chance(rng, spec.share_prob)) {
      ResourceShare share{arn, {}};
      for (const auto& a : u.accounts) {
        if (a != owner && chance(rng, 0.5)) share.shared_with.insert(a);
      }
      if (!share.shared_with.empty()) s.shares.push_back(std::move(share));
    }
    s.resources.push_back(std::move(res));
  }
  return u;
}

inline AccessRequest random_request(Rng& rng, const Universe& u) {
  AccessRequest r;
  r.user = pick(rng, u.users);
  r.account = pick(rng, u.accounts);
  r.action = pick(rng, concrete_actions());
  r.resource = (u.unregistered.empty() || chance(rng, 0.75))
                   ? pick(rng, u.registered)
                   : pick(rng, u.unregistered);
  if (chance(rng, 0.5)) r.context["env"] = chance(rng, 0.5) ? "prod" : "dev";
  if (chance(rng, 0.5)) r.context["team"] = chance(rng, 0.5) ? "red" : "blue";
  return r;
}

// A random valid policy document in the full grammar.
inline PolicyDocument random_document(Rng& rng, bool resource_based) {
  UniverseSpec spec;
  spec.condition_prob = 0.5;
  PolicyDocument doc{"doc", {}};
  const auto pool = resource_patterns_for({"arn:aws:s3:::assets",
                                           "arn:aws:s3:::assets/*"});
  int n = int(pick(rng, 5));
  for (int i = 0; i < n; ++i) {
    Statement st = random_statement(rng, spec, pool);
    if (chance(rng, 0.3)) {
      auto& c = st.condition.clauses[ConditionOperator::kStringLike];
      c["path"] = {"team/*", "shared/*"};
    }
    if (resource_based) st.principals = std::vector<std::string>{"u1", account_id(2)};
    doc.statements.push_back(std::move(st));
  }
  return doc;
}

// A random event from a small pool of users, accounts and actions within
// `span_seconds` of `start`. Coarse times make (time, source) ties common.
inline AuditEvent random_event(Rng& rng, Timestamp start, int span_seconds) {
  static const std::vector<std::string> kUsers = {"u0", "u1", "u2"};
  AuditEvent e;
  e.time = start + std::chrono::seconds(pick(rng, std::size_t(span_seconds)));
  e.user = pick(rng, kUsers);
  e.account = account_id(int(pick(rng, 3)));
  e.source = chance(rng, 0.8) ? e.account : account_id(int(pick(rng, 3)));
  e.verdict = chance(rng, 0.3) ? Verdict::kDeny : Verdict::kAllow;
  if (chance(rng, 0.15)) {
    e.kind = EventKind::kLogin;
  } else {
    e.kind = EventKind::kApiCall;
    e.action = pick(rng, concrete_actions());
    e.resource = resource_arn(int(pick(rng, 4)), e.account);
  }
  return e;
}

}  // namespace iamsim::testing
