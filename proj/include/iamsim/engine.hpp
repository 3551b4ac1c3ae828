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

// Authorization decisions.
//
// Evaluation order:
//   1. Identity statements come from the permission sets assigned to the
//      (user, account) pair. Resource statements come from the policy of
//      the target resource, if it is registered and has one.
//   2. A statement matches when its action, resource and condition match
//      and, for resource statements, a principal names the user or the
//      user's account.
//   3. Any matching Deny wins.
//   4. Same account as the resource owner: one matching Allow from either
//      side is enough.
//   5. Cross-account: a matching identity Allow is required, together with
//      a matching resource Allow or a share of the resource with the
//      requesting account.
//   6. Otherwise the request is implicitly denied.
//
// Unregistered resources are treated as owned by the requesting account and
// carry no resource policy.

#pragma once

#include <algorithm>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "iamsim/audit.hpp"
#include "iamsim/error.hpp"
#include "iamsim/organization.hpp"
#include "iamsim/policy.hpp"

namespace iamsim {

struct AccessRequest {
  std::string user;
  std::string account;  // the account the user is acting in
  std::string action;
  std::string resource;
  RequestContext context;
  // Only used when the request is turned into an audit event.
  std::optional<Timestamp> time;

  friend bool operator==(const AccessRequest&, const AccessRequest&) = default;
};

enum class Reason {
  kExplicitDeny,
  kImplicitDeny,
  kSameAccountAllow,
  kCrossAccountAllow,
};

inline std::string_view to_string(Reason r) {
  switch (r) {
    case Reason::kExplicitDeny: return "ExplicitDeny";
    case Reason::kImplicitDeny: return "ImplicitDeny";
    case Reason::kSameAccountAllow: return "SameAccountAllow";
    case Reason::kCrossAccountAllow: return "CrossAccountAllow";
  }
  return "?";
}

enum class PolicySide { kIdentity, kResource };

struct MatchTrace {
  PolicySide side = PolicySide::kIdentity;
  std::string origin;  // permission set id, or resource arn
  std::string policy;  // policy name within the origin
  std::size_t statement = 0;
  Effect effect = Effect::kAllow;
  bool action_match = false;
  bool resource_match = false;
  bool condition_match = false;
  bool principal_match = true;  // always true for identity statements

  bool matched() const noexcept {
    return action_match && resource_match && condition_match && principal_match;
  }

  friend bool operator==(const MatchTrace&, const MatchTrace&) = default;
};

struct Decision {
  Verdict verdict = Verdict::kDeny;
  Reason reason = Reason::kImplicitDeny;
  // Rule that settled the verdict: 3 explicit deny, 4 same-account allow,
  // 5 cross-account allow, 6 implicit deny.
  int rule = 6;
  std::vector<MatchTrace> trace;

  std::string owner_account;
  bool resource_registered = false;
  bool cross_account = false;
  bool share_covers = false;

  bool has_match(PolicySide side, Effect effect) const {
    return std::any_of(trace.begin(), trace.end(), [&](const MatchTrace& t) {
      return t.side == side && t.effect == effect && t.matched();
    });
  }

  friend bool operator==(const Decision&, const Decision&) = default;
};

namespace detail {

inline Action checked_action(const Organization& org,
                             const AccessRequest& req) {
  if (!org.find_user(req.user)) {
    throw InvalidRequestError("unknown user \"" + req.user + "\"");
  }
  if (!org.has_account(req.account)) {
    throw InvalidRequestError("unknown account \"" + req.account + "\"");
  }
  if (req.resource.empty() || has_wildcard(req.resource)) {
    throw InvalidRequestError("request resource \"" + req.resource +
                              "\" must be a non-empty concrete identifier");
  }
  try {
    return Action::parse(req.action);
  } catch (const ParseError& e) {
    throw InvalidRequestError(e.what());
  }
}

}  // namespace detail

// Throws InvalidRequestError when the request does not fit the organization.
inline void validate_request(const Organization& org, const AccessRequest& req) {
  detail::checked_action(org, req);
}

inline Decision authorize(const Organization& org, const AccessRequest& req) {
  const Action action = detail::checked_action(org, req);
  Decision d;

  auto evaluate = [&](const Statement& st) {
    MatchTrace t;
    t.effect = st.effect;
    t.action_match = std::any_of(
        st.actions.begin(), st.actions.end(),
        [&](const ActionPattern& p) { return action_matches(p, action); });
    t.resource_match = std::any_of(
        st.resources.begin(), st.resources.end(),
        [&](const ResourcePattern& p) { return resource_matches(p, req.resource); });
    t.condition_match = condition_holds(st.condition, req.context);
    return t;
  };

  for (const PermissionSet* ps :
       resolve_permission_sets(org, req.user, req.account)) {
    for (const auto& doc : ps->policies) {
      for (std::size_t i = 0; i < doc.statements.size(); ++i) {
        MatchTrace t = evaluate(doc.statements[i]);
        t.side = PolicySide::kIdentity;
        t.origin = ps->id;
        t.policy = doc.name;
        t.statement = i;
        d.trace.push_back(std::move(t));
      }
    }
  }

  const Resource* resource = org.find_resource(req.resource);
  d.resource_registered = resource != nullptr;
  d.owner_account = resource ? resource->owner_account : req.account;
  if (resource && resource->policy) {
    const auto& doc = *resource->policy;
    for (std::size_t i = 0; i < doc.statements.size(); ++i) {
      const Statement& st = doc.statements[i];
      MatchTrace t = evaluate(st);
      t.side = PolicySide::kResource;
      t.origin = resource->arn;
      t.policy = doc.name;
      t.statement = i;
      t.principal_match =
          st.principals &&
          std::any_of(st.principals->begin(), st.principals->end(),
                      [&](const std::string& p) {
                        return p == req.user || p == req.account;
                      });
      d.trace.push_back(std::move(t));
    }
  }

  d.cross_account = d.owner_account != req.account;
  d.share_covers = d.cross_account && resource &&
                   shares_covering(org, req.resource, req.account);

  const bool any_deny = d.has_match(PolicySide::kIdentity, Effect::kDeny) ||
                        d.has_match(PolicySide::kResource, Effect::kDeny);
  const bool identity_allow = d.has_match(PolicySide::kIdentity, Effect::kAllow);
  const bool resource_allow = d.has_match(PolicySide::kResource, Effect::kAllow);

  if (any_deny) {
    d.verdict = Verdict::kDeny;
    d.reason = Reason::kExplicitDeny;
    d.rule = 3;
  } else if (!d.cross_account && (identity_allow || resource_allow)) {
    d.verdict = Verdict::kAllow;
    d.reason = Reason::kSameAccountAllow;
    d.rule = 4;
  } else if (d.cross_account && identity_allow &&
             (resource_allow || d.share_covers)) {
    d.verdict = Verdict::kAllow;
    d.reason = Reason::kCrossAccountAllow;
    d.rule = 5;
  } else {
    d.verdict = Verdict::kDeny;
    d.reason = Reason::kImplicitDeny;
    d.rule = 6;
  }
  return d;
}

// Receives one event per evaluated request. Implementations must accept
// appends from concurrent evaluators.
class AuditSink {
 public:
  virtual ~AuditSink() = default;
  virtual void append(AuditEvent event) = 0;
};

class ArchiveSink : public AuditSink {
 public:
  void append(AuditEvent event) override {
    std::lock_guard lock(mu_);
    archive_.append(std::move(event));
  }

  LogArchive archive() const {
    std::lock_guard lock(mu_);
    return archive_;
  }

 private:
  mutable std::mutex mu_;
  LogArchive archive_;
};

// The audit record of one evaluated request. Requests without a time get
// `fallback_time`.
inline AuditEvent to_audit_event(const AccessRequest& req, const Decision& d,
                                 Timestamp fallback_time) {
  AuditEvent e;
  e.time = req.time.value_or(fallback_time);
  e.kind = EventKind::kApiCall;
  e.user = req.user;
  e.account = req.account;
  e.action = req.action;
  e.resource = req.resource;
  e.verdict = d.verdict;
  e.source = req.account;
  return e;
}

// Default clock for simulated requests that carry no time: request i is
// stamped `start + i` seconds.
inline Timestamp default_simulation_start() {
  return parse_timestamp("2024-01-01T00:00:00Z");
}

// Evaluates requests in order. Every request is validated before any is
// evaluated, so an invalid batch emits nothing; the error names the index
// of the first invalid request.
inline std::vector<Decision> simulate(
    const Organization& org, const std::vector<AccessRequest>& requests,
    AuditSink* sink = nullptr, Timestamp start = default_simulation_start()) {
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      validate_request(org, requests[i]);
    } catch (const InvalidRequestError& e) {
      throw InvalidRequestError("request " + std::to_string(i) + ": " +
                                e.what());
    }
  }
  std::vector<Decision> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    out.push_back(authorize(org, requests[i]));
    if (sink) {
      sink->append(to_audit_event(requests[i], out.back(),
                                  start + std::chrono::seconds(i)));
    }
  }
  return out;
}

namespace detail {

inline const char* yes_no(bool b) { return b ? "yes" : "no"; }

inline std::string render_trace_line(const MatchTrace& t) {
  std::ostringstream os;
  os << "  [" << t.origin << " / " << t.policy << " #" << t.statement << "] "
     << to_string(t.effect) << ": action=" << yes_no(t.action_match)
     << " resource=" << yes_no(t.resource_match)
     << " condition=" << yes_no(t.condition_match);
  if (t.side == PolicySide::kResource) {
    os << " principal=" << yes_no(t.principal_match);
  }
  os << " -> " << (t.matched() ? "MATCH" : "no match");
  if (!t.matched()) {
    os << " (failed:";
    if (!t.action_match) os << " action";
    if (!t.resource_match) os << " resource";
    if (!t.condition_match) os << " condition";
    if (!t.principal_match) os << " principal";
    os << ")";
  }
  return os.str();
}

}  // namespace detail

// Deterministic, human-readable rendering of a decision.
inline std::string explain(const AccessRequest& req, const Decision& d) {
  using detail::yes_no;
  std::ostringstream os;
  os << "request: user=" << req.user << " account=" << req.account
     << " action=" << req.action << " resource=" << req.resource << "\n";
  for (const auto& [k, v] : req.context) {
    os << "context: " << k << "=" << v << "\n";
  }
  os << "resource owner: " << d.owner_account
     << (d.resource_registered ? "" : " (unregistered; defaults to caller)")
     << (d.cross_account ? " [cross-account]" : " [same account]") << "\n";

  auto section = [&](PolicySide side, const char* title) {
    os << title << ":";
    bool any = false;
    for (const auto& t : d.trace) {
      if (t.side != side) continue;
      os << "\n" << detail::render_trace_line(t);
      any = true;
    }
    os << (any ? "\n" : " none\n");
  };
  section(PolicySide::kIdentity, "identity statements");
  section(PolicySide::kResource, "resource statements");

  const bool deny = d.has_match(PolicySide::kIdentity, Effect::kDeny) ||
                    d.has_match(PolicySide::kResource, Effect::kDeny);
  const bool identity_allow = d.has_match(PolicySide::kIdentity, Effect::kAllow);
  const bool resource_allow = d.has_match(PolicySide::kResource, Effect::kAllow);

  os << "rule 3 (explicit deny): " << (deny ? "fired" : "not fired");
  if (deny) {
    for (const auto& t : d.trace) {
      if (t.matched() && t.effect == Effect::kDeny) {
        os << "; deny at [" << t.origin << " / " << t.policy << " #"
           << t.statement << "]";
      }
    }
  }
  os << "\n";
  if (!deny) {
    if (!d.cross_account) {
      os << "rule 4 (same account): identity allow=" << yes_no(identity_allow)
         << " resource allow=" << yes_no(resource_allow) << " -> "
         << (d.rule == 4 ? "satisfied" : "failed") << "\n";
    } else {
      os << "rule 5 (cross-account): identity allow=" << yes_no(identity_allow)
         << " resource allow=" << yes_no(resource_allow)
         << " share=" << yes_no(d.share_covers) << " -> "
         << (d.rule == 5 ? "satisfied" : "failed");
      if (d.rule != 5) {
        os << " (" << (identity_allow ? "" : "identity-side allow missing")
           << (!identity_allow && !(resource_allow || d.share_covers) ? "; " : "")
           << (resource_allow || d.share_covers
                   ? ""
                   : "resource-side requirement unmet")
           << ")";
      }
      os << "\n";
    }
  }
  if (d.rule == 6) os << "rule 6 (implicit deny): fired\n";
  os << "decision: " << to_string(d.verdict) << " (" << to_string(d.reason)
     << ")\n";
  return os.str();
}

inline std::string explain(const Organization& org, const AccessRequest& req) {
  return explain(req, authorize(org, req));
}

// ---------------------------------------------------------------------------
// JSON Lines wire formats

inline AccessRequest request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("request must be a JSON object");
  AccessRequest r;
  for (const auto& [key, value] : j.items()) {
    if (key == "context") {
      if (!value.is_object()) throw ParseError("\"context\" must be an object");
      for (const auto& [k, v] : value.items()) {
        if (!v.is_string()) {
          throw ParseError("context value for \"" + k + "\" must be a string");
        }
        r.context[k] = v.get<std::string>();
      }
      continue;
    }
    if (!value.is_string()) {
      throw ParseError("\"" + key + "\" must be a string");
    }
    const auto s = value.get<std::string>();
    if (key == "user") r.user = s;
    else if (key == "account") r.account = s;
    else if (key == "action") r.action = s;
    else if (key == "resource") r.resource = s;
    else if (key == "time") r.time = parse_timestamp(s);
    else throw ParseError("unknown request field \"" + key + "\"");
  }
  for (auto [name, field] : {std::pair{"user", &r.user},
                             std::pair{"account", &r.account},
                             std::pair{"action", &r.action},
                             std::pair{"resource", &r.resource}}) {
    if (field->empty()) {
      throw ParseError(std::string("missing \"") + name + "\"");
    }
  }
  return r;
}

inline nlohmann::ordered_json request_to_json(const AccessRequest& r) {
  nlohmann::ordered_json j;
  j["user"] = r.user;
  j["account"] = r.account;
  j["action"] = r.action;
  j["resource"] = r.resource;
  j["context"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : r.context) j["context"][k] = v;
  if (r.time) j["time"] = format_timestamp(*r.time);
  return j;
}

inline nlohmann::ordered_json decision_to_json(const Decision& d,
                                               bool with_trace) {
  nlohmann::ordered_json j;
  j["verdict"] = to_string(d.verdict);
  j["reason"] = to_string(d.reason);
  if (with_trace) {
    j["rule"] = d.rule;
    j["owner_account"] = d.owner_account;
    j["cross_account"] = d.cross_account;
    j["share"] = d.share_covers;
    auto& arr = j["trace"] = nlohmann::ordered_json::array();
    for (const auto& t : d.trace) {
      nlohmann::ordered_json x;
      x["side"] = t.side == PolicySide::kIdentity ? "identity" : "resource";
      x["origin"] = t.origin;
      x["policy"] = t.policy;
      x["statement"] = t.statement;
      x["effect"] = to_string(t.effect);
      x["action"] = t.action_match;
      x["resource"] = t.resource_match;
      x["condition"] = t.condition_match;
      x["principal"] = t.principal_match;
      x["matched"] = t.matched();
      arr.push_back(std::move(x));
    }
  }
  return j;
}

}  // namespace iamsim
