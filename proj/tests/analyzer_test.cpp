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

#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "iamsim/analyzer.hpp"

namespace iamsim {
namespace {

constexpr const char* kWork = "100000000001";
const Principal kDev{"dev", kWork};

Timestamp ts(const char* text) { return parse_timestamp(text); }

Organization dev_org() {
  Scenario s;
  s.management_account = "100000000000";
  s.root.accounts = {{"100000000000", "m"}, {kWork, "work"}};
  s.users.push_back({"dev", "", {"devs"}});
  s.users.push_back({"ops", "", {}});
  s.groups.push_back({"devs", ""});
  s.permission_sets.push_back(
      {"Dev",
       {parse_policy(R"({"Version":"2012-10-17","Statement":[
           {"Effect":"Allow","Action":"s3:*","Resource":"*"},
           {"Effect":"Allow","Action":"ec2:*","Resource":"*"},
           {"Effect":"Allow","Action":"acm:*","Resource":"*"},
           {"Effect":"Deny","Action":"iam:*","Resource":"*"}]})",
                     "Main")}});
  s.assignments.push_back({Subject::group("devs"), kWork, "Dev"});
  for (const char* arn : {"arn:aws:s3:::bucket-1", "arn:aws:s3:::bucket-2",
                          "arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1"}) {
    s.resources.push_back({arn, kWork, std::nullopt});
  }
  return build_org(s);
}

AuditEvent call(const char* time, std::string action, std::string resource,
                Verdict v = Verdict::kAllow, std::string user = "dev") {
  AuditEvent e;
  e.time = ts(time);
  e.user = std::move(user);
  e.account = kWork;
  e.source = kWork;
  e.action = std::move(action);
  e.resource = std::move(resource);
  e.verdict = v;
  return e;
}

const StatementRef kS3{"Dev", "Main", 0};
const StatementRef kEc2{"Dev", "Main", 1};
const StatementRef kAcm{"Dev", "Main", 2};

TEST(UsageIndex, Empty) {
  UsageIndex idx = build_usage_index(dev_org(), std::vector<AuditEvent>{});
  EXPECT_TRUE(idx.last_used.empty());
  EXPECT_TRUE(idx.observations.empty());
  EXPECT_TRUE(idx.actions_seen.empty());
}

TEST(UsageIndex, SingleEvent) {
  auto idx = build_usage_index(
      dev_org(), {call("2024-03-01T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1")});
  ASSERT_EQ(idx.last_used.size(), 1u);
  EXPECT_EQ(idx.last_used.at(kS3), ts("2024-03-01T00:00:00Z"));
  EXPECT_EQ(idx.observations.at(kDev).size(), 1u);
}

TEST(UsageIndex, LatestUseWins) {
  auto idx = build_usage_index(
      dev_org(), {call("2024-03-01T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1"),
                  call("2024-03-05T00:00:00Z", "s3:PutObject", "arn:aws:s3:::bucket-2")});
  EXPECT_EQ(idx.last_used.at(kS3), ts("2024-03-05T00:00:00Z"));
}

TEST(UsageIndex, DeniedCallsCreditNothing) {
  auto idx = build_usage_index(
      dev_org(), {call("2024-03-01T00:00:00Z", "iam:GetRole", "arn:aws:iam::1:role/r",
                       Verdict::kDeny)});
  EXPECT_TRUE(idx.last_used.empty());
  EXPECT_TRUE(idx.observations.empty());
  EXPECT_EQ(idx.actions_seen, std::set<std::string>{"iam:GetRole"});
}

TEST(UsageIndex, RejectsDisorderAndStrangers) {
  Organization org = dev_org();
  EXPECT_THROW(build_usage_index(
                   org, {call("2024-03-05T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1"),
                         call("2024-03-01T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1")}),
               InvalidRequestError);
  EXPECT_THROW(build_usage_index(org, {call("2024-03-05T00:00:00Z", "s3:GetObject",
                                            "arn:aws:s3:::bucket-1", Verdict::kAllow,
                                            "ghost")}),
               InvalidRequestError);
}

TEST(Unused, NeverUsedAndRecentlyUsed) {
  Organization org = dev_org();
  const Timestamp as_of = ts("2024-06-01T00:00:00Z");
  auto idx = build_usage_index(
      org, {call("2024-01-01T00:00:00Z", "acm:DescribeCertificate", "arn:aws:acm:x:1:certificate/c"),
            call("2024-05-31T00:00:00Z", "ec2:DescribeInstances",
                 "arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1")});
  auto report = unused_report(idx, org, as_of, 90);
  ASSERT_EQ(report.size(), 2u);
  EXPECT_EQ(report[0].ref, kS3);
  EXPECT_FALSE(report[0].last_used.has_value());
  EXPECT_EQ(report[1].ref, kAcm);
  EXPECT_EQ(report[1].last_used, ts("2024-01-01T00:00:00Z"));
  EXPECT_EQ(report[1].actions, std::vector<std::string>{"acm:*"});

  // Threshold boundary: a use exactly threshold days ago is still recent.
  auto edge = build_usage_index(
      org, {call("2024-03-03T00:00:00Z", "acm:ListCertificates", "arn:aws:acm:x:1:certificate/c")});
  for (const auto& e : unused_report(edge, org, as_of, 90)) EXPECT_NE(e.ref, kAcm);

  EXPECT_THROW(unused_report(idx, org, as_of, -1), InvalidRequestError);
  std::string text = render_unused_text(report);
  EXPECT_NE(text.find("Dev\tMain\t0\tnever\ts3:*"), std::string::npos) << text;
}

std::vector<AuditEvent> dev_activity() {
  return {
      call("2024-03-01T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1"),
      call("2024-03-01T00:01:00Z", "s3:GetObject", "arn:aws:s3:::bucket-2"),
      call("2024-03-01T00:02:00Z", "s3:PutObject", "arn:aws:s3:::bucket-1"),
      call("2024-03-01T00:03:00Z", "ec2:DescribeInstances",
           "arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1"),
      call("2024-03-01T00:04:00Z", "ec2:RunInstances",
           "arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1"),
      call("2024-03-01T00:05:00Z", "s3:DeleteObject", "arn:aws:s3:::bucket-2",
           Verdict::kAllow, "ops"),
  };
}

const TimeWindow kMarch{ts("2024-03-01T00:00:00Z"), ts("2024-03-31T23:59:59Z")};

TEST(Generate, LevelFourKeepsExactPairs) {
  Organization org = dev_org();
  auto idx = build_usage_index(org, dev_activity());
  auto g = generate_least_privilege(org, idx, kDev, ActionLevel::kAction, kMarch);
  EXPECT_EQ(serialize_policy(g.document),
            R"({"Version":"2012-10-17","Statement":[)"
            R"({"Effect":"Allow","Action":"ec2:DescribeInstances","Resource":"arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1"},)"
            R"({"Effect":"Allow","Action":"ec2:RunInstances","Resource":"arn:aws:ec2:ap-northeast-2:100000000001:instance/i-1"},)"
            R"({"Effect":"Allow","Action":"s3:GetObject","Resource":["arn:aws:s3:::bucket-1","arn:aws:s3:::bucket-2"]},)"
            R"({"Effect":"Allow","Action":"s3:PutObject","Resource":"arn:aws:s3:::bucket-1"}]})");
  EXPECT_EQ(g.verification.observed, 5u);
  EXPECT_EQ(g.verification.covered, 5u);
  EXPECT_DOUBLE_EQ(g.verification.coverage(), 1.0);
  EXPECT_EQ(g.verification.excess_hits, 0u);
  // 5 actions seen x 3 resources, minus 5 observed pairs.
  EXPECT_EQ(g.verification.sampled, 10u);
  EXPECT_TRUE(g.verified);
}

TEST(Generate, LevelTwoAndThree) {
  Organization org = dev_org();
  auto idx = build_usage_index(org, dev_activity());
  auto two = generate_least_privilege(org, idx, kDev, ActionLevel::kService, kMarch);
  EXPECT_EQ(serialize_policy(two.document),
            R"({"Version":"2012-10-17","Statement":[)"
            R"({"Effect":"Allow","Action":"ec2:*","Resource":"*"},)"
            R"({"Effect":"Allow","Action":"s3:*","Resource":"*"}]})");
  EXPECT_DOUBLE_EQ(two.verification.coverage(), 1.0);

  auto three = generate_least_privilege(org, idx, kDev, ActionLevel::kVerb, kMarch);
  EXPECT_EQ(serialize_policy(three.document),
            R"({"Version":"2012-10-17","Statement":[)"
            R"({"Effect":"Allow","Action":"ec2:Describe*","Resource":"*"},)"
            R"({"Effect":"Allow","Action":"ec2:RunInstances","Resource":"*"},)"
            R"({"Effect":"Allow","Action":"s3:Get*","Resource":"*"},)"
            R"({"Effect":"Allow","Action":"s3:Put*","Resource":"*"}]})");
  EXPECT_EQ(three.fallback_actions, std::vector<std::string>{"ec2:RunInstances"});
  EXPECT_DOUBLE_EQ(three.verification.coverage(), 1.0);
  EXPECT_GE(two.verification.excess_hits, three.verification.excess_hits);
  EXPECT_NE(render_verification_text(three).find("warning: no verb for ec2:RunInstances"),
            std::string::npos);
}

TEST(Generate, SingletonObservation) {
  Organization org = dev_org();
  auto idx = build_usage_index(
      org, {call("2024-03-01T00:00:00Z", "s3:GetObject", "arn:aws:s3:::bucket-1")});
  auto g = generate_least_privilege(org, idx, kDev, ActionLevel::kAction, kMarch);
  ASSERT_EQ(g.document.statements.size(), 1u);
  EXPECT_EQ(g.document.statements[0].actions[0].str(), "s3:GetObject");
  EXPECT_EQ(g.verification.coverage(), 1.0);
  EXPECT_EQ(g.verification.sampled, 2u);
  EXPECT_EQ(g.verification.excess_hits, 0u);
}

TEST(Generate, ErrorCases) {
  Organization org = dev_org();
  auto idx = build_usage_index(org, dev_activity());
  const TimeWindow april{ts("2024-04-01T00:00:00Z"), ts("2024-04-30T00:00:00Z")};
  EXPECT_THROW(generate_least_privilege(org, idx, kDev, ActionLevel::kAction, april),
               InvalidRequestError);
  EXPECT_THROW(generate_least_privilege(org, idx, kDev, ActionLevel::kAction,
                                        {kMarch.end, kMarch.start}),
               InvalidRequestError);
  EXPECT_THROW(generate_least_privilege(org, idx, kDev, ActionLevel::kFullAccess, kMarch),
               InvalidRequestError);
  EXPECT_THROW(generate_least_privilege(org, idx, {"ghost", kWork}, ActionLevel::kAction,
                                        kMarch),
               InvalidRequestError);
  EXPECT_THROW(Principal::parse("dev"), ParseError);
  EXPECT_THROW(TimeWindow::parse("2024-03-01T00:00:00Z"), ParseError);
}

TEST(Generate, WhatIfReplacesTheUsersGrants) {
  Organization org = dev_org();
  PolicyDocument doc{"LeastPrivilege",
                     {parse_policy(R"({"Version":"2012-10-17","Statement":[
                         {"Effect":"Allow","Action":"s3:GetObject","Resource":"*"}]})")
                          .statements}};
  Organization what_if = install_generated_policy(org, kDev, doc);
  auto sets = resolve_permission_sets(what_if, "dev", kWork);
  ASSERT_EQ(sets.size(), 1u);
  EXPECT_EQ(sets[0]->id, "generated-least-privilege");
  EXPECT_TRUE(what_if.find_user("dev")->groups.empty());
  // Other users keep their grants; the original is untouched.
  EXPECT_EQ(resolve_permission_sets(org, "dev", kWork)[0]->id, "Dev");
}

TEST(Replay, SamplingIsSeededAndBounded) {
  Organization org = dev_org();
  auto idx = build_usage_index(org, dev_activity());
  GenerationOptions opts;
  opts.max_samples = 4;
  auto a = generate_least_privilege(org, idx, kDev, ActionLevel::kService, kMarch, opts);
  auto b = generate_least_privilege(org, idx, kDev, ActionLevel::kService, kMarch, opts);
  EXPECT_EQ(a.verification.sampled, 4u);
  EXPECT_EQ(a.verification, b.verification);
}

}  // namespace
}  // namespace iamsim
