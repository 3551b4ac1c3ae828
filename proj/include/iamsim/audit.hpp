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

// Audit events, per-account logs and the merged log archive.
//
// Log files are JSON Lines with one event per line:
//
//   {"time":"2024-03-01T09:00:00Z","kind":"ApiCall","user":"alice",
//    "account":"200000000001","action":"s3:GetObject",
//    "resource":"arn:aws:s3:::assets","verdict":"Allow",
//    "source":"200000000001"}
//
// Archives are ordered by (time, source) with ties kept in arrival order.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "iamsim/error.hpp"
#include "iamsim/policy.hpp"
#include "json.hpp"

namespace iamsim {

using Timestamp = std::chrono::sys_seconds;

// Strict RFC 3339 UTC with second precision: YYYY-MM-DDTHH:MM:SSZ.
inline Timestamp parse_timestamp(std::string_view text) {
  auto fail = [&]() -> Timestamp {
    throw ParseError("timestamp \"" + std::string(text) +
                     "\" is not of the form YYYY-MM-DDTHH:MM:SSZ");
  };
  if (text.size() != 20 || text[4] != '-' || text[7] != '-' ||
      text[10] != 'T' || text[13] != ':' || text[16] != ':' ||
      text[19] != 'Z') {
    return fail();
  }
  auto num = [&](std::size_t pos, std::size_t len) {
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
      if (text[i] < '0' || text[i] > '9') fail();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                  std::chrono::month{unsigned(num(5, 2))},
                                  std::chrono::day{unsigned(num(8, 2))}};
  int hh = num(11, 2), mm = num(14, 2), ss = num(17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) return fail();
  return std::chrono::sys_days{ymd} + std::chrono::hours{hh} +
         std::chrono::minutes{mm} + std::chrono::seconds{ss};
}

inline std::string format_timestamp(Timestamp t) {
  auto days = std::chrono::floor<std::chrono::days>(t);
  std::chrono::year_month_day ymd{days};
  std::chrono::hh_mm_ss hms{t - days};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()),
                int(hms.hours().count()), int(hms.minutes().count()),
                int(hms.seconds().count()));
  return buf;
}

// Accepts a bare number of seconds or a number with an s/m/h/d suffix.
inline std::chrono::seconds parse_duration(std::string_view text) {
  if (text.empty()) throw ParseError("empty duration");
  long long unit = 1;
  std::string_view digits = text;
  switch (text.back()) {
    case 's': unit = 1; digits.remove_suffix(1); break;
    case 'm': unit = 60; digits.remove_suffix(1); break;
    case 'h': unit = 3600; digits.remove_suffix(1); break;
    case 'd': unit = 86400; digits.remove_suffix(1); break;
    default: break;
  }
  if (digits.empty() || digits.size() > 12 ||
      !std::all_of(digits.begin(), digits.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    throw ParseError("malformed duration \"" + std::string(text) + "\"");
  }
  return std::chrono::seconds{std::stoll(std::string(digits)) * unit};
}

enum class Verdict { kAllow, kDeny };

inline std::string_view to_string(Verdict v) {
  return v == Verdict::kAllow ? "Allow" : "Deny";
}

inline Verdict parse_verdict(std::string_view text) {
  if (text == "Allow") return Verdict::kAllow;
  if (text == "Deny") return Verdict::kDeny;
  throw ParseError("verdict must be Allow or Deny, got \"" + std::string(text) +
                   "\"");
}

enum class EventKind { kLogin, kApiCall };

inline std::string_view to_string(EventKind k) {
  return k == EventKind::kLogin ? "Login" : "ApiCall";
}

inline EventKind parse_event_kind(std::string_view text) {
  if (text == "Login") return EventKind::kLogin;
  if (text == "ApiCall") return EventKind::kApiCall;
  throw ParseError("event kind must be Login or ApiCall, got \"" +
                   std::string(text) + "\"");
}

struct AuditEvent {
  Timestamp time{};
  EventKind kind = EventKind::kApiCall;
  std::string user;
  std::string account;
  std::string action;    // empty for Login
  std::string resource;  // empty for Login
  Verdict verdict = Verdict::kAllow;
  std::string source;    // producing account

  friend bool operator==(const AuditEvent&, const AuditEvent&) = default;
};

inline void validate_event(const AuditEvent& e) {
  if (e.user.empty() || e.account.empty() || e.source.empty()) {
    throw ParseError("event user, account and source must be non-empty");
  }
  if (e.kind == EventKind::kLogin) {
    if (!e.action.empty() || !e.resource.empty()) {
      throw ParseError("Login events carry no action or resource");
    }
    return;
  }
  if (e.action.empty() || e.resource.empty()) {
    throw ParseError("ApiCall events need an action and a resource");
  }
  Action::parse(e.action);
  if (has_wildcard(e.resource)) {
    throw ParseError("event resource \"" + e.resource +
                     "\" must not contain '*'");
  }
}

inline nlohmann::ordered_json event_to_json(const AuditEvent& e) {
  nlohmann::ordered_json j;
  j["time"] = format_timestamp(e.time);
  j["kind"] = to_string(e.kind);
  j["user"] = e.user;
  j["account"] = e.account;
  j["action"] = e.action;
  j["resource"] = e.resource;
  j["verdict"] = to_string(e.verdict);
  j["source"] = e.source;
  return j;
}

// `source` defaults to `account`; `action` and `resource` default to empty.
inline AuditEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("event must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (key != "time" && key != "kind" && key != "user" && key != "account" &&
        key != "action" && key != "resource" && key != "verdict" &&
        key != "source") {
      throw ParseError("unknown event field \"" + key + "\"");
    }
  }
  auto str = [&](const char* key, bool required) -> std::string {
    if (!j.contains(key)) {
      if (required) throw ParseError(std::string("missing \"") + key + "\"");
      return {};
    }
    if (!j[key].is_string()) {
      throw ParseError(std::string("\"") + key + "\" must be a string");
    }
    return j[key].get<std::string>();
  };
  AuditEvent e;
  e.time = parse_timestamp(str("time", true));
  e.kind = parse_event_kind(str("kind", true));
  e.user = str("user", true);
  e.account = str("account", true);
  e.action = str("action", false);
  e.resource = str("resource", false);
  e.verdict = parse_verdict(str("verdict", true));
  e.source = j.contains("source") ? str("source", true) : e.account;
  validate_event(e);
  return e;
}

class LogArchive {
 public:
  LogArchive() = default;

  // Inserts after every event with an equal or earlier (time, source) key,
  // so late arrivals land in timestamp order and ties keep arrival order.
  void append(AuditEvent event) {
    validate_event(event);
    auto pos = std::upper_bound(
        events_.begin(), events_.end(), event,
        [](const AuditEvent& a, const AuditEvent& b) { return key(a) < key(b); });
    events_.insert(pos, std::move(event));
  }

  const std::vector<AuditEvent>& events() const noexcept { return events_; }
  std::size_t size() const noexcept { return events_.size(); }
  bool empty() const noexcept { return events_.empty(); }

  std::set<std::string> accounts_covered() const {
    std::set<std::string> out;
    for (const auto& e : events_) out.insert(e.source);
    return out;
  }

  friend bool operator==(const LogArchive&, const LogArchive&) = default;

  static std::tuple<Timestamp, const std::string&> key(const AuditEvent& e) {
    return {e.time, e.source};
  }

 private:
  friend LogArchive merge_archives(const std::vector<LogArchive>& archives);
  std::vector<AuditEvent> events_;
};

inline LogArchive append_event(LogArchive archive, AuditEvent event) {
  archive.append(std::move(event));
  return archive;
}

// Concatenates in argument order, then stable-sorts by (time, source).
inline LogArchive merge_archives(const std::vector<LogArchive>& archives) {
  LogArchive out;
  std::size_t total = 0;
  for (const auto& a : archives) total += a.size();
  out.events_.reserve(total);
  for (const auto& a : archives) {
    out.events_.insert(out.events_.end(), a.events().begin(), a.events().end());
  }
  std::stable_sort(out.events_.begin(), out.events_.end(),
                   [](const AuditEvent& a, const AuditEvent& b) {
                     return LogArchive::key(a) < LogArchive::key(b);
                   });
  return out;
}

// Reads JSON Lines. `label` names the source in error messages
// ("<label>:<line>: ..."). Blank lines are skipped.
inline LogArchive read_log(std::string_view text,
                           const std::string& label = "log") {
  LogArchive archive;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      archive.append(event_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(label + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(label + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return archive;
}

inline std::string write_log(const std::vector<AuditEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += event_to_json(e).dump();
    out += '\n';
  }
  return out;
}

inline std::string write_log(const LogArchive& archive) {
  return write_log(archive.events());
}

// Action filter for queries. Unlike ActionPattern it also accepts a wildcard
// service with a concrete or prefixed operation, e.g. `*:Delete*`.
class ActionFilter {
 public:
  static ActionFilter parse(std::string_view text) {
    if (text == "*" || text == "*:*") return ActionFilter{};
    auto colon = text.find(':');
    if (colon == std::string_view::npos ||
        text.find(':', colon + 1) != std::string_view::npos) {
      throw ParseError("action filter \"" + std::string(text) +
                       "\" must have the form service:operation");
    }
    ActionFilter f;
    auto service = text.substr(0, colon);
    if (service != "*") {
      detail::check_service(service, text);
      f.service_ = std::string(service);
    }
    f.operation_ = std::string(text.substr(colon + 1));
    detail::check_operation(f.operation_, text, true);
    return f;
  }

  bool matches(std::string_view action) const {
    auto colon = action.find(':');
    if (colon == std::string_view::npos) return false;
    if (service_ && action.substr(0, colon) != *service_) return false;
    return operation_matches(operation_, action.substr(colon + 1));
  }

 private:
  std::optional<std::string> service_;  // nullopt: any service
  std::string operation_ = "*";
};

struct EventFilter {
  std::optional<std::string> user;
  std::optional<std::string> account;
  std::optional<ActionFilter> action;
  std::optional<EventKind> kind;
  std::optional<Verdict> verdict;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // inclusive

  bool matches(const AuditEvent& e) const {
    if (user && e.user != *user) return false;
    if (account && e.account != *account) return false;
    if (action && (e.action.empty() || !action->matches(e.action))) return false;
    if (kind && e.kind != *kind) return false;
    if (verdict && e.verdict != *verdict) return false;
    if (from && e.time < *from) return false;
    if (to && e.time > *to) return false;
    return true;
  }
};

inline std::vector<AuditEvent> query(const LogArchive& archive,
                                     const EventFilter& filter) {
  if (filter.from && filter.to && *filter.from > *filter.to) {
    throw InvalidRequestError("query time range is empty: from > to");
  }
  std::vector<AuditEvent> out;
  std::copy_if(archive.events().begin(), archive.events().end(),
               std::back_inserter(out),
               [&](const AuditEvent& e) { return filter.matches(e); });
  return out;
}

struct DeniedCell {
  Timestamp bucket_start;
  std::string user;
  std::string account;
  std::size_t count = 0;

  friend bool operator==(const DeniedCell&, const DeniedCell&) = default;
};

// Deny counts per (epoch-aligned bucket, user, account), ordered by bucket
// then user then account.
inline std::vector<DeniedCell> denied_access_summary(
    const LogArchive& archive, std::chrono::seconds bucket) {
  if (bucket.count() <= 0) {
    throw InvalidRequestError("bucket duration must be positive");
  }
  std::map<std::tuple<Timestamp, std::string, std::string>, std::size_t> cells;
  for (const auto& e : archive.events()) {
    if (e.verdict != Verdict::kDeny) continue;
    auto since_epoch = e.time.time_since_epoch();
    auto offset = since_epoch % bucket;
    if (offset.count() < 0) offset += bucket;
    Timestamp start{since_epoch - offset};
    ++cells[{start, e.user, e.account}];
  }
  std::vector<DeniedCell> out;
  out.reserve(cells.size());
  for (const auto& [k, n] : cells) {
    out.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), n});
  }
  return out;
}

}  // namespace iamsim
