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

// The `iamsim` command line. Commands are thin adapters over the library.
//
// Exit codes: 0 success (or Allow), 1 Deny, 2 invalid input, 3 I/O failure.
// Data goes to stdout, diagnostics to stderr. Output files and stdout are
// only written once a command has fully succeeded.

#pragma once

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iamsim/analyzer.hpp"
#include "iamsim/audit.hpp"
#include "iamsim/engine.hpp"
#include "iamsim/error.hpp"
#include "iamsim/organization.hpp"
#include "iamsim/policy.hpp"
#include "iamsim/scenario.hpp"
#include "iamsim/verbs.hpp"

namespace iamsim::cli {

enum ExitCode : int {
  kOk = 0,
  kDenied = 1,
  kInvalid = 2,
  kIoFailure = 3,
};

enum class Format { kText, kJson };

struct RunConfig {
  std::string scenario;
  Format format = Format::kText;
  std::uint64_t seed = GenerationOptions::kDefaultSeed;
};

namespace detail {

inline void write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open \"" + path + "\" for writing");
  f << data;
  f.flush();
  if (!f) throw IoError("error writing \"" + path + "\"");
}

inline Organization load_scenario(const RunConfig& cfg) {
  if (cfg.scenario.empty()) {
    throw InvalidRequestError("--scenario is required");
  }
  return load_org(cfg.scenario);
}

inline LogArchive load_logs(const std::vector<std::string>& paths) {
  std::vector<LogArchive> parts;
  for (const auto& p : paths) parts.push_back(read_log(read_file(p), p));
  return merge_archives(parts);
}

struct NumberedRequests {
  std::vector<AccessRequest> requests;
  std::vector<std::size_t> lines;
};

inline NumberedRequests read_requests(const std::string& path) {
  const std::string text = read_file(path);
  NumberedRequests out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.requests.push_back(request_from_json(nlohmann::json::parse(line)));
      out.lines.push_back(lineno);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline RequestContext parse_context(const std::vector<std::string>& pairs) {
  RequestContext ctx;
  for (const auto& kv : pairs) {
    auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("context entry \"" + kv + "\" must have the form key=value");
    }
    ctx[kv.substr(0, eq)] = kv.substr(eq + 1);
  }
  return ctx;
}

// Runs `body`, mapping library errors onto exit codes and stderr.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoFailure;
  } catch (const ValidationError& e) {
    err << "invalid scenario: " << e.violations().size() << " violation(s)\n";
    for (const auto& v : e.violations()) err << "  - " << v << "\n";
    return kInvalid;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
}

}  // namespace detail

inline int cmd_validate(const RunConfig& cfg, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, [&] {
    const Organization org = detail::load_scenario(cfg);
    const auto& s = org.scenario();
    if (cfg.format == Format::kJson) {
      nlohmann::ordered_json j;
      j["valid"] = true;
      j["accounts"] = org.account_ids().size();
      j["users"] = s.users.size();
      j["groups"] = s.groups.size();
      j["permission_sets"] = s.permission_sets.size();
      j["assignments"] = s.assignments.size();
      j["resources"] = s.resources.size();
      j["shares"] = s.shares.size();
      out << j.dump() << "\n";
    } else {
      out << "valid: " << org.account_ids().size() << " accounts, "
          << s.users.size() << " users, " << s.groups.size() << " groups, "
          << s.permission_sets.size() << " permission sets, "
          << s.assignments.size() << " assignments, " << s.resources.size()
          << " resources, " << s.shares.size() << " shares\n";
    }
    return kOk;
  });
}

struct AuthorizeArgs {
  std::string user, account, action, resource;
  std::vector<std::string> context;
  bool explain = false;
};

inline int cmd_authorize(const RunConfig& cfg, const AuthorizeArgs& args,
                         std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Organization org = detail::load_scenario(cfg);
    AccessRequest req{args.user, args.account, args.action, args.resource,
                      detail::parse_context(args.context), std::nullopt};
    const Decision d = authorize(org, req);
    if (cfg.format == Format::kJson) {
      out << decision_to_json(d, args.explain).dump() << "\n";
    } else {
      out << to_string(d.verdict) << " (" << to_string(d.reason) << ")\n";
      if (args.explain) out << explain(req, d);
    }
    return d.verdict == Verdict::kAllow ? kOk : kDenied;
  });
}

struct SimulateArgs {
  std::string requests;
  std::string out = "-";
  std::optional<std::string> emit_log;
  std::string start_time = "2024-01-01T00:00:00Z";
  bool trace = false;
};

inline int cmd_simulate(const RunConfig& cfg, const SimulateArgs& args,
                        std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const Organization org = detail::load_scenario(cfg);
    const auto batch = detail::read_requests(args.requests);
    const Timestamp start = parse_timestamp(args.start_time);
    for (std::size_t i = 0; i < batch.requests.size(); ++i) {
      try {
        validate_request(org, batch.requests[i]);
      } catch (const InvalidRequestError& e) {
        throw InvalidRequestError(args.requests + ":" +
                                  std::to_string(batch.lines[i]) + ": " +
                                  e.what());
      }
    }
    ArchiveSink sink;
    const auto decisions = simulate(org, batch.requests, &sink, start);
    std::string body;
    for (const auto& d : decisions) {
      body += decision_to_json(d, args.trace).dump();
      body += '\n';
    }
    if (args.emit_log) detail::write_file(*args.emit_log, write_log(sink.archive()));
    if (args.out == "-") {
      out << body;
    } else {
      detail::write_file(args.out, body);
    }
    return kOk;
  });
}

struct AnalyzeArgs {
  std::string subaction;
  std::vector<std::string> logs;
  std::string as_of;
  int threshold_days = 90;
  std::string principal;
  int level = 4;
  std::string window;
  std::optional<std::string> policy_out;
  std::size_t max_samples = 10000;
  std::optional<std::string> verbs;
};

inline int cmd_analyze(const RunConfig& cfg, const AnalyzeArgs& args,
                       std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const Organization org = detail::load_scenario(cfg);
    if (args.logs.empty()) throw InvalidRequestError("--log is required");
    const LogArchive archive = detail::load_logs(args.logs);
    const UsageIndex index = build_usage_index(org, archive);

    if (args.subaction == "unused") {
      if (args.as_of.empty()) throw InvalidRequestError("--as-of is required");
      const auto report = unused_report(index, org, parse_timestamp(args.as_of),
                                        args.threshold_days);
      if (cfg.format == Format::kJson) {
        out << unused_to_json(report).dump() << "\n";
      } else {
        out << render_unused_text(report);
      }
      return kOk;
    }

    if (args.principal.empty()) throw InvalidRequestError("--principal is required");
    if (args.window.empty()) throw InvalidRequestError("--window is required");
    VerbTable custom;
    GenerationOptions options;
    options.seed = cfg.seed;
    options.max_samples = args.max_samples;
    if (args.verbs) {
      custom = VerbTable::parse(read_file(*args.verbs));
      options.verbs = &custom;
    }
    const GeneratedPolicy g = generate_least_privilege(
        org, index, Principal::parse(args.principal),
        action_level_from_int(args.level), TimeWindow::parse(args.window),
        options);
    if (args.policy_out) {
      detail::write_file(*args.policy_out, serialize_policy(g.document, 2) + "\n");
    }
    if (cfg.format == Format::kJson) {
      out << generated_to_json(g).dump() << "\n";
    } else {
      out << serialize_policy(g.document, 2) << "\n" << render_verification_text(g);
    }
    return kOk;
  });
}

struct AuditArgs {
  std::string subaction;
  std::vector<std::string> logs;
  std::string out = "archive.jsonl";
  std::optional<std::string> user, account, action, kind, verdict, from, to;
  std::string bucket = "1h";
};

inline int cmd_audit(const RunConfig& cfg, const AuditArgs& args,
                     std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&]() -> int {
    const LogArchive archive = detail::load_logs(args.logs);

    if (args.subaction == "merge") {
      detail::write_file(args.out, write_log(archive));
      const auto covered = archive.accounts_covered();
      if (cfg.format == Format::kJson) {
        nlohmann::ordered_json j;
        j["events"] = archive.size();
        j["accounts_covered"] = covered;
        j["out"] = args.out;
        out << j.dump() << "\n";
      } else {
        out << "merged " << archive.size() << " events from "
            << args.logs.size() << " file(s) covering " << covered.size()
            << " account(s) into " << args.out << "\n";
      }
      return kOk;
    }

    if (args.subaction == "query") {
      EventFilter f;
      f.user = args.user;
      f.account = args.account;
      if (args.action) f.action = ActionFilter::parse(*args.action);
      if (args.kind) f.kind = parse_event_kind(*args.kind);
      if (args.verdict) f.verdict = parse_verdict(*args.verdict);
      if (args.from) f.from = parse_timestamp(*args.from);
      if (args.to) f.to = parse_timestamp(*args.to);
      const auto events = query(archive, f);
      if (cfg.format == Format::kJson) {
        out << write_log(events);
      } else {
        std::ostringstream os;
        os << "TIME\tKIND\tUSER\tACCOUNT\tACTION\tRESOURCE\tVERDICT\tSOURCE\n";
        for (const auto& e : events) {
          os << format_timestamp(e.time) << '\t' << to_string(e.kind) << '\t'
             << e.user << '\t' << e.account << '\t'
             << (e.action.empty() ? "-" : e.action) << '\t'
             << (e.resource.empty() ? "-" : e.resource) << '\t'
             << to_string(e.verdict) << '\t' << e.source << '\n';
        }
        os << events.size() << " event(s)\n";
        out << os.str();
      }
      return kOk;
    }

    // denied-summary
    const auto cells = denied_access_summary(archive, parse_duration(args.bucket));
    std::size_t total = 0;
    for (const auto& c : cells) total += c.count;
    if (cfg.format == Format::kJson) {
      nlohmann::ordered_json j;
      j["bucket_seconds"] = parse_duration(args.bucket).count();
      j["total"] = total;
      auto& arr = j["cells"] = nlohmann::ordered_json::array();
      for (const auto& c : cells) {
        arr.push_back({{"bucket_start", format_timestamp(c.bucket_start)},
                       {"user", c.user},
                       {"account", c.account},
                       {"count", c.count}});
      }
      out << j.dump() << "\n";
    } else {
      std::ostringstream os;
      os << "BUCKET_START\tUSER\tACCOUNT\tDENIED\n";
      for (const auto& c : cells) {
        os << format_timestamp(c.bucket_start) << '\t' << c.user << '\t'
           << c.account << '\t' << c.count << '\n';
      }
      os << "total denied: " << total << "\n";
      out << os.str();
    }
    return kOk;
  });
}

inline int run(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Multi-account IAM policy simulator and least-privilege analyzer",
               "iamsim"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string format = "text";
  app.add_option("--scenario", cfg.scenario, "Scenario JSON file");
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "text"}));
  app.add_option("--seed", cfg.seed, "Seed for complement sampling");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("scenario", validate_path, "Scenario JSON file");

  AuthorizeArgs auth;
  auto* authorize_cmd = app.add_subcommand(
      "authorize", "Decide one request (exit 0 Allow, 1 Deny)");
  authorize_cmd->add_option("--user", auth.user)->required();
  authorize_cmd->add_option("--account", auth.account)->required();
  authorize_cmd->add_option("--action", auth.action)->required();
  authorize_cmd->add_option("--resource", auth.resource)->required();
  authorize_cmd->add_option("--context", auth.context, "key=value, repeatable");
  authorize_cmd->add_flag("--explain", auth.explain, "Print the decision trace");

  SimulateArgs sim;
  std::string emit_log;
  auto* simulate_cmd =
      app.add_subcommand("simulate", "Decide a JSON Lines batch of requests");
  simulate_cmd->add_option("--requests", sim.requests)->required();
  simulate_cmd->add_option("--out", sim.out, "Decisions file, '-' for stdout");
  simulate_cmd->add_option("--emit-log", emit_log, "Write audit events here");
  simulate_cmd->add_option("--start-time", sim.start_time,
                           "Time of the first request that carries none");
  simulate_cmd->add_flag("--trace", sim.trace, "Include decision traces");

  AnalyzeArgs an;
  std::string policy_out, verbs_path;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "Least-privilege analysis of audit logs");
  analyze_cmd->add_option("subaction", an.subaction)
      ->required()
      ->check(CLI::IsMember({"unused", "generate"}));
  analyze_cmd->add_option("--log", an.logs, "Audit log file(s)")->required();
  analyze_cmd->add_option("--as-of", an.as_of);
  analyze_cmd->add_option("--threshold-days", an.threshold_days);
  analyze_cmd->add_option("--principal", an.principal, "user@account");
  analyze_cmd->add_option("--level", an.level)->check(CLI::Range(2, 4));
  analyze_cmd->add_option("--window", an.window, "START,END (inclusive)");
  analyze_cmd->add_option("--policy-out", policy_out,
                          "Also write the generated policy here");
  analyze_cmd->add_option("--max-samples", an.max_samples);
  analyze_cmd->add_option("--verbs", verbs_path, "Verb table override");

  AuditArgs au;
  std::string a_user, a_account, a_action, a_kind, a_verdict, a_from, a_to;
  auto* audit_cmd = app.add_subcommand("audit", "Merge and query audit logs");
  audit_cmd->add_option("subaction", au.subaction)
      ->required()
      ->check(CLI::IsMember({"merge", "query", "denied-summary"}));
  audit_cmd->add_option("logs", au.logs, "Audit log files")->required();
  audit_cmd->add_option("--out", au.out, "Merged archive path");
  audit_cmd->add_option("--user", a_user);
  audit_cmd->add_option("--account", a_account);
  audit_cmd->add_option("--action", a_action, "Action filter, e.g. *:Delete*");
  audit_cmd->add_option("--kind", a_kind)->check(CLI::IsMember({"Login", "ApiCall"}));
  audit_cmd->add_option("--verdict", a_verdict)->check(CLI::IsMember({"Allow", "Deny"}));
  audit_cmd->add_option("--from", a_from);
  audit_cmd->add_option("--to", a_to);
  audit_cmd->add_option("--bucket", au.bucket, "Bucket width, e.g. 1h");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }

  cfg.format = format == "json" ? Format::kJson : Format::kText;

  if (validate->parsed()) {
    if (!validate_path.empty()) cfg.scenario = validate_path;
    return cmd_validate(cfg, out, err);
  }
  if (authorize_cmd->parsed()) return cmd_authorize(cfg, auth, out, err);
  if (simulate_cmd->parsed()) {
    if (!emit_log.empty()) sim.emit_log = emit_log;
    return cmd_simulate(cfg, sim, out, err);
  }
  if (analyze_cmd->parsed()) {
    if (!policy_out.empty()) an.policy_out = policy_out;
    if (!verbs_path.empty()) an.verbs = verbs_path;
    return cmd_analyze(cfg, an, out, err);
  }
  auto opt = [](const std::string& s) {
    return s.empty() ? std::nullopt : std::optional<std::string>(s);
  };
  au.user = opt(a_user);
  au.account = opt(a_account);
  au.action = opt(a_action);
  au.kind = opt(a_kind);
  au.verdict = opt(a_verdict);
  au.from = opt(a_from);
  au.to = opt(a_to);
  return cmd_audit(cfg, au, out, err);
}

inline int run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("iamsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace iamsim::cli
