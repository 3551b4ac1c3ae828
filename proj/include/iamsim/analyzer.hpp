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

// Least-privilege analysis over audit activity: statement last-used
// tracking, stale-statement reports, and policy generation from observed
// calls with replay verification.

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "iamsim/audit.hpp"
#include "iamsim/engine.hpp"
#include "iamsim/error.hpp"
#include "iamsim/organization.hpp"
#include "iamsim/policy.hpp"
#include "iamsim/verbs.hpp"

namespace iamsim {

struct StatementRef {
  std::string permission_set;
  std::string policy;
  std::size_t statement = 0;

  friend auto operator<=>(const StatementRef&, const StatementRef&) = default;
};

struct Principal {
  std::string user;
  std::string account;

  // "user@account"
  static Principal parse(std::string_view text) {
    auto at = text.rfind('@');
    if (at == std::string_view::npos || at == 0 || at + 1 == text.size()) {
      throw ParseError("principal \"" + std::string(text) +
                       "\" must have the form user@account");
    }
    return {std::string(text.substr(0, at)), std::string(text.substr(at + 1))};
  }

  std::string str() const { return user + "@" + account; }

  friend auto operator<=>(const Principal&, const Principal&) = default;
};

struct Observation {
  std::string action;
  std::string resource;
  Timestamp time;

  friend bool operator==(const Observation&, const Observation&) = default;
};

struct UsageIndex {
  std::map<StatementRef, Timestamp> last_used;
  // Allowed API calls per principal, in ingestion order.
  std::map<Principal, std::vector<Observation>> observations;
  // Every action seen in an API call, whatever its verdict.
  std::set<std::string> actions_seen;

  friend bool operator==(const UsageIndex&, const UsageIndex&) = default;
};

// Folds a time-ordered event stream into a usage index. Each allowed API
// call is re-evaluated against `org` with an empty context; every identity
// Allow statement that matches is credited with the event time.
inline UsageIndex build_usage_index(const Organization& org,
                                    const std::vector<AuditEvent>& events) {
  UsageIndex index;
  std::optional<Timestamp> previous;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const AuditEvent& e = events[i];
    validate_event(e);
    if (previous && e.time < *previous) {
      throw InvalidRequestError("event " + std::to_string(i) +
                                " is out of time order");
    }
    previous = e.time;
    if (!org.find_user(e.user) || !org.has_account(e.account)) {
      throw InvalidRequestError("event " + std::to_string(i) +
                                ": principal " + e.user + "@" + e.account +
                                " is not in the organization");
    }
    if (e.kind != EventKind::kApiCall) continue;
    index.actions_seen.insert(e.action);
    if (e.verdict != Verdict::kAllow) continue;

    AccessRequest req{e.user, e.account, e.action, e.resource, {}, e.time};
    const Decision d = authorize(org, req);
    for (const auto& t : d.trace) {
      if (t.side == PolicySide::kIdentity && t.effect == Effect::kAllow &&
          t.matched()) {
        index.last_used[{t.origin, t.policy, t.statement}] = e.time;
      }
    }
    index.observations[{e.user, e.account}].push_back(
        {e.action, e.resource, e.time});
  }
  return index;
}

inline UsageIndex build_usage_index(const Organization& org,
                                    const LogArchive& archive) {
  return build_usage_index(org, archive.events());
}

struct UnusedEntry {
  StatementRef ref;
  std::optional<Timestamp> last_used;  // nullopt: never used
  std::vector<std::string> actions;

  friend bool operator==(const UnusedEntry&, const UnusedEntry&) = default;
};

// Allow statements of every permission set whose last use is missing or
// earlier than `as_of - threshold_days`. Never-used statements come first,
// then the oldest; ties are ordered by statement reference.
inline std::vector<UnusedEntry> unused_report(const UsageIndex& index,
                                              const Organization& org,
                                              Timestamp as_of,
                                              int threshold_days) {
  if (threshold_days < 0) {
    throw InvalidRequestError("threshold_days must be non-negative");
  }
  const Timestamp cutoff = as_of - std::chrono::days{threshold_days};
  std::vector<UnusedEntry> out;
  for (const auto& ps : org.scenario().permission_sets) {
    for (const auto& doc : ps.policies) {
      for (std::size_t i = 0; i < doc.statements.size(); ++i) {
        const Statement& st = doc.statements[i];
        if (st.effect != Effect::kAllow) continue;
        StatementRef ref{ps.id, doc.name, i};
        auto it = index.last_used.find(ref);
        std::optional<Timestamp> last;
        if (it != index.last_used.end()) last = it->second;
        if (last && *last >= cutoff) continue;
        UnusedEntry entry{std::move(ref), last, {}};
        for (const auto& a : st.actions) entry.actions.push_back(a.str());
        out.push_back(std::move(entry));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const UnusedEntry& a, const UnusedEntry& b) {
                     if (a.last_used.has_value() != b.last_used.has_value()) {
                       return !a.last_used.has_value();
                     }
                     if (a.last_used != b.last_used) {
                       return *a.last_used < *b.last_used;
                     }
                     return a.ref < b.ref;
                   });
  return out;
}

inline std::string render_unused_text(const std::vector<UnusedEntry>& report) {
  std::ostringstream os;
  os << "PERMISSION_SET\tPOLICY\tSTATEMENT\tLAST_USED\tACTIONS\n";
  for (const auto& e : report) {
    os << e.ref.permission_set << '\t' << e.ref.policy << '\t'
       << e.ref.statement << '\t'
       << (e.last_used ? format_timestamp(*e.last_used) : "never") << '\t';
    for (std::size_t i = 0; i < e.actions.size(); ++i) {
      os << (i ? "," : "") << e.actions[i];
    }
    os << '\n';
  }
  return os.str();
}

inline nlohmann::ordered_json unused_to_json(
    const std::vector<UnusedEntry>& report) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : report) {
    nlohmann::ordered_json j;
    j["permission_set"] = e.ref.permission_set;
    j["policy"] = e.ref.policy;
    j["statement"] = e.ref.statement;
    j["last_used"] =
        e.last_used ? format_timestamp(*e.last_used) : std::string("never");
    j["actions"] = e.actions;
    arr.push_back(std::move(j));
  }
  return arr;
}

struct TimeWindow {
  Timestamp start;
  Timestamp end;  // inclusive

  bool contains(Timestamp t) const { return start <= t && t <= end; }

  // "START,END" in RFC 3339.
  static TimeWindow parse(std::string_view text) {
    auto comma = text.find(',');
    if (comma == std::string_view::npos) {
      throw ParseError("window must have the form START,END");
    }
    return {parse_timestamp(text.substr(0, comma)),
            parse_timestamp(text.substr(comma + 1))};
  }

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

struct VerificationResult {
  std::size_t observed = 0;
  std::size_t covered = 0;
  std::size_t sampled = 0;
  std::size_t excess_hits = 0;

  double coverage() const {
    return observed == 0 ? 0.0 : double(covered) / double(observed);
  }
  double excess() const {
    return sampled == 0 ? 0.0 : double(excess_hits) / double(sampled);
  }

  friend bool operator==(const VerificationResult&,
                         const VerificationResult&) = default;
};

struct GeneratedPolicy {
  PolicyDocument document;
  ActionLevel level = ActionLevel::kAction;
  Principal principal;
  TimeWindow window;
  // Actions with no verb in the table, kept exact at level 3.
  std::vector<std::string> fallback_actions;
  VerificationResult verification;
  bool verified = false;
};

struct GenerationOptions {
  const VerbTable* verbs = &VerbTable::defaults();
  std::uint64_t seed = kDefaultSeed;
  std::size_t max_samples = 10000;

  static constexpr std::uint64_t kDefaultSeed = 20240226;
};

inline constexpr std::string_view kGeneratedPolicyName = "LeastPrivilege";
inline constexpr std::string_view kGeneratedPermissionSet = "generated-least-privilege";

namespace detail {

inline std::vector<Observation> observations_in(const UsageIndex& index,
                                                const Principal& principal,
                                                const TimeWindow& window) {
  if (window.end < window.start) {
    throw InvalidRequestError("window is empty: start is after end");
  }
  std::vector<Observation> out;
  auto it = index.observations.find(principal);
  if (it != index.observations.end()) {
    for (const auto& o : it->second) {
      if (window.contains(o.time)) out.push_back(o);
    }
  }
  if (out.empty()) {
    throw InvalidRequestError("principal " + principal.str() +
                              " has no allowed activity in the window");
  }
  return out;
}

}  // namespace detail

// Builds the policy document without replay verification. Each distinct
// generalized action becomes one Allow statement, ordered by pattern. Level 4
// keeps the exact observed resources; levels 2 and 3 use `*`.
inline GeneratedPolicy generate_policy_document(
    const UsageIndex& index, const Principal& principal, ActionLevel level,
    const TimeWindow& window, const VerbTable& verbs = VerbTable::defaults()) {
  if (level == ActionLevel::kFullAccess) {
    throw InvalidRequestError("least-privilege generation needs level 2, 3 or 4");
  }
  const auto observed = detail::observations_in(index, principal, window);

  GeneratedPolicy out;
  out.level = level;
  out.principal = principal;
  out.window = window;

  std::map<ActionPattern, std::set<std::string>> groups;
  std::set<std::string> fallbacks;
  for (const auto& o : observed) {
    auto g = generalize_action(Action::parse(o.action), level, verbs);
    if (g.fallback) fallbacks.insert(o.action);
    auto& resources = groups[g.pattern];
    resources.insert(level == ActionLevel::kAction ? o.resource : "*");
  }
  out.fallback_actions.assign(fallbacks.begin(), fallbacks.end());

  out.document.name = std::string(kGeneratedPolicyName);
  for (const auto& [pattern, resources] : groups) {
    Statement st;
    st.effect = Effect::kAllow;
    st.actions.push_back(pattern);
    // "*" only appears alone, at levels 2 and 3.
    for (const auto& r : resources) st.resources.push_back(ResourcePattern::parse(r));
    out.document.statements.push_back(std::move(st));
  }
  return out;
}

// Copy of `org` where `doc` is the principal's only permission set in its
// account: the user's direct assignments and group memberships are removed.
inline Organization install_generated_policy(const Organization& org,
                                             const Principal& principal,
                                             const PolicyDocument& doc) {
  if (!org.find_user(principal.user) || !org.has_account(principal.account)) {
    throw InvalidRequestError("principal " + principal.str() +
                              " is not in the organization");
  }
  Scenario next = org.scenario();
  std::string ps_id(kGeneratedPermissionSet);
  while (org.find_permission_set(ps_id)) ps_id += "-x";
  for (auto& u : next.users) {
    if (u.id == principal.user) u.groups.clear();
  }
  std::erase_if(next.assignments, [&](const Assignment& a) {
    return a.subject.kind == SubjectKind::kUser && a.subject.id == principal.user;
  });
  PolicyDocument installed = doc;
  if (installed.name.empty()) installed.name = std::string(kGeneratedPolicyName);
  next.permission_sets.push_back({ps_id, {std::move(installed)}});
  next.assignments.push_back(
      {Subject::user(principal.user), principal.account, ps_id});
  return build_org(std::move(next));
}

// Replays the observed calls against the installed policy (coverage) and
// probes unobserved (action, resource) pairs drawn from actions seen in the
// log crossed with registered resources (excess). A probe counts as excess
// when it is allowed with a matching identity Allow, i.e. when the
// generated policy itself grants it.
inline VerificationResult replay_verify(
    const Organization& org_with_policy, const Principal& principal,
    const std::vector<Observation>& observed,
    const std::set<std::string>& actions_seen,
    const GenerationOptions& options = {}) {
  VerificationResult r;
  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (const auto& o : observed) {
    seen_pairs.emplace(o.action, o.resource);
    AccessRequest req{principal.user, principal.account, o.action, o.resource,
                      {}, o.time};
    ++r.observed;
    if (authorize(org_with_policy, req).verdict == Verdict::kAllow) ++r.covered;
  }

  std::vector<std::string> actions(actions_seen.begin(), actions_seen.end());
  std::vector<std::string> resources;
  for (const auto& res : org_with_policy.scenario().resources) {
    resources.push_back(res.arn);
  }
  const std::uint64_t universe = std::uint64_t(actions.size()) * resources.size();
  std::uint64_t unobserved = universe;
  for (const auto& [a, res] : seen_pairs) {
    if (actions_seen.count(a) && org_with_policy.find_resource(res)) --unobserved;
  }

  auto probe = [&](const std::string& a, const std::string& res) {
    AccessRequest req{principal.user, principal.account, a, res, {}, {}};
    Decision d = authorize(org_with_policy, req);
    ++r.sampled;
    if (d.verdict == Verdict::kAllow &&
        d.has_match(PolicySide::kIdentity, Effect::kAllow)) {
      ++r.excess_hits;
    }
  };

  if (unobserved == 0) return r;
  if (unobserved <= options.max_samples) {
    for (const auto& a : actions) {
      for (const auto& res : resources) {
        if (!seen_pairs.count({a, res})) probe(a, res);
      }
    }
    return r;
  }
  // Uniform rejection sampling over the cross product; the complement holds
  // more than max_samples pairs so acceptance is frequent.
  std::mt19937_64 rng(options.seed);
  while (r.sampled < options.max_samples) {
    const auto& a = actions[rng() % actions.size()];
    const auto& res = resources[rng() % resources.size()];
    if (seen_pairs.count({a, res})) continue;
    probe(a, res);
  }
  return r;
}

// Generates the policy and verifies it by replay. `verified` requires full
// coverage, and zero excess at level 4.
inline GeneratedPolicy generate_least_privilege(
    const Organization& org, const UsageIndex& index,
    const Principal& principal, ActionLevel level, const TimeWindow& window,
    const GenerationOptions& options = {}) {
  GeneratedPolicy out =
      generate_policy_document(index, principal, level, window, *options.verbs);
  const Organization what_if =
      install_generated_policy(org, principal, out.document);
  out.verification =
      replay_verify(what_if, principal,
                    detail::observations_in(index, principal, window),
                    index.actions_seen, options);
  out.verified = out.verification.observed == out.verification.covered &&
                 (level != ActionLevel::kAction ||
                  out.verification.excess_hits == 0);
  return out;
}

inline std::string render_verification_text(const GeneratedPolicy& g) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "principal: %s\nlevel: %d\nwindow: %s,%s\n",
                g.principal.str().c_str(), to_int(g.level),
                format_timestamp(g.window.start).c_str(),
                format_timestamp(g.window.end).c_str());
  out += buf;
  const auto& v = g.verification;
  std::snprintf(buf, sizeof buf, "coverage: %.6f (%zu/%zu)\n", v.coverage(),
                v.covered, v.observed);
  out += buf;
  std::snprintf(buf, sizeof buf, "excess: %.6f (%zu/%zu sampled)\n", v.excess(),
                v.excess_hits, v.sampled);
  out += buf;
  for (const auto& a : g.fallback_actions) {
    out += "warning: no verb for " + a + "; kept at level 4\n";
  }
  out += std::string("verified: ") + (g.verified ? "yes" : "no") + "\n";
  return out;
}

inline nlohmann::ordered_json generated_to_json(const GeneratedPolicy& g) {
  nlohmann::ordered_json j;
  j["principal"] = g.principal.str();
  j["level"] = to_int(g.level);
  j["window"] = {format_timestamp(g.window.start),
                 format_timestamp(g.window.end)};
  j["policy"] = policy_to_json(g.document);
  nlohmann::ordered_json v;
  v["observed"] = g.verification.observed;
  v["covered"] = g.verification.covered;
  v["coverage"] = g.verification.coverage();
  v["sampled"] = g.verification.sampled;
  v["excess_hits"] = g.verification.excess_hits;
  v["excess"] = g.verification.excess();
  j["verification"] = std::move(v);
  j["fallback_actions"] = g.fallback_actions;
  j["verified"] = g.verified;
  return j;
}

}  // namespace iamsim
