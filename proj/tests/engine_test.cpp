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
#include "iamsim/engine.hpp"
#include "iamsim/scenario.hpp"
#include "support/oracle.hpp"
#include "support/random_org.hpp"

namespace iamsim {
namespace {

const std::string kBucketSharing =
    IAMSIM_SOURCE_DIR "/scenarios/bucket-sharing.json";
const std::string kBucket = "arn:aws:s3:::bucket-s";

AccessRequest request(std::string user, std::string account, std::string action,
                      std::string resource) {
  AccessRequest r;
  r.user = std::move(user);
  r.account = std::move(account);
  r.action = std::move(action);
  r.resource = std::move(resource);
  return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

TEST(Authorize, BucketSharingCases) {
  Organization org = load_org(kBucketSharing);
  auto d1 = authorize(org, request("user-1", "111111111111", "s3:GetObject", kBucket));
  EXPECT_EQ(d1.verdict, Verdict::kAllow);
  EXPECT_EQ(d1.reason, Reason::kSameAccountAllow);
  EXPECT_EQ(d1.rule, 4);

  auto d2 = authorize(org, request("user-2", "222222222222", "s3:GetObject", kBucket));
  EXPECT_EQ(d2.verdict, Verdict::kDeny);
  EXPECT_EQ(d2.reason, Reason::kImplicitDeny);
  EXPECT_TRUE(d2.has_match(PolicySide::kIdentity, Effect::kAllow));
  EXPECT_FALSE(d2.has_match(PolicySide::kResource, Effect::kAllow));
  EXPECT_TRUE(d2.cross_account);

  auto d3 = authorize(org, request("user-3", "333333333333", "s3:GetObject", kBucket));
  EXPECT_EQ(d3.verdict, Verdict::kAllow);
  EXPECT_EQ(d3.reason, Reason::kCrossAccountAllow);
  EXPECT_EQ(d3.rule, 5);
}

TEST(Authorize, NoAssignmentsMeansImplicitDeny) {
  Organization org = load_org(kBucketSharing);
  // user-1 has nothing in account C.
  auto d = authorize(org, request("user-1", "333333333333", "s3:GetObject",
                                  "arn:aws:s3:::elsewhere"));
  EXPECT_EQ(d.verdict, Verdict::kDeny);
  EXPECT_EQ(d.reason, Reason::kImplicitDeny);
  EXPECT_TRUE(d.trace.empty());
  EXPECT_FALSE(d.resource_registered);
  EXPECT_EQ(d.owner_account, "333333333333");
}

Organization allow_all_but_delete() {
  Scenario s;
  s.management_account = "100000000000";
  s.root.accounts.push_back({"100000000000", "m"});
  s.users.push_back({"alice", "", {}});
  s.permission_sets.push_back(
      {"Storage",
       {parse_policy(R"({"Version":"2012-10-17","Statement":[
           {"Effect":"Allow","Action":"s3:*","Resource":"*"},
           {"Effect":"Deny","Action":"s3:DeleteObject","Resource":"*"}]})",
                     "S3")}});
  s.assignments.push_back({Subject::user("alice"), "100000000000", "Storage"});
  return build_org(s);
}

TEST(Authorize, ExplicitDenyOverridesWildcardAllow) {
  Organization org = allow_all_but_delete();
  auto get = authorize(org, request("alice", "100000000000", "s3:GetObject",
                                    "arn:aws:s3:::b/k"));
  EXPECT_EQ(get.verdict, Verdict::kAllow);
  auto del = authorize(org, request("alice", "100000000000", "s3:DeleteObject",
                                    "arn:aws:s3:::b/k"));
  EXPECT_EQ(del.verdict, Verdict::kDeny);
  EXPECT_EQ(del.reason, Reason::kExplicitDeny);
  EXPECT_EQ(del.rule, 3);
  EXPECT_TRUE(contains(explain(org, request("alice", "100000000000",
                                            "s3:DeleteObject", "arn:aws:s3:::b/k")),
                       "deny at [Storage / S3 #1]"));
}

TEST(Authorize, InvalidRequests) {
  Organization org = load_org(kBucketSharing);
  EXPECT_THROW(authorize(org, request("ghost", "111111111111", "s3:GetObject", kBucket)),
               InvalidRequestError);
  EXPECT_THROW(authorize(org, request("user-1", "999999999999", "s3:GetObject", kBucket)),
               InvalidRequestError);
  EXPECT_THROW(authorize(org, request("user-1", "111111111111", "s3:Get*", kBucket)),
               InvalidRequestError);
  EXPECT_THROW(authorize(org, request("user-1", "111111111111", "s3:GetObject",
                                      "arn:aws:s3:::bucket-*")),
               InvalidRequestError);
}

TEST(Explain, CrossAccountFailureNamesTheMissingSide) {
  Organization org = load_org(kBucketSharing);
  std::string text =
      explain(org, request("user-2", "222222222222", "s3:GetObject", kBucket));
  EXPECT_TRUE(contains(text, "resource-side requirement unmet")) << text;
  EXPECT_TRUE(contains(text, "principal=no")) << text;
  EXPECT_TRUE(contains(text, "decision: Deny (ImplicitDeny)")) << text;
  EXPECT_EQ(text, explain(org, request("user-2", "222222222222", "s3:GetObject",
                                       kBucket)));
}

TEST(Trace, EveryApplicableStatementAppearsOnce) {
  testing::Rng rng(41);
  for (int i = 0; i < 50; ++i) {
    auto u = testing::random_universe(rng, {});
    Organization org = build_org(u.scenario);
    for (int k = 0; k < 20; ++k) {
      AccessRequest req = testing::random_request(rng, u);
      Decision d = authorize(org, req);
      std::size_t expected = 0;
      for (const auto& doc : resolve_identity_policies(org, req.user, req.account)) {
        expected += doc.statements.size();
      }
      if (const Resource* r = org.find_resource(req.resource); r && r->policy) {
        expected += r->policy->statements.size();
      }
      EXPECT_EQ(d.trace.size(), expected);
    }
  }
}

TEST(Authorize, AgreesWithOracleOnRandomUniverses) {
  testing::Rng rng(43);
  for (int i = 0; i < 100; ++i) {
    auto u = testing::random_universe(rng, {});
    Organization org = build_org(u.scenario);
    for (int k = 0; k < 50; ++k) {
      AccessRequest req = testing::random_request(rng, u);
      auto got = authorize(org, req);
      auto want = testing::oracle_authorize(org, req);
      ASSERT_EQ(got.verdict, want.verdict) << explain(req, got);
      ASSERT_EQ(got.reason, want.reason) << explain(req, got);
    }
  }
}

TEST(Simulate, PreservesOrderAndComposes) {
  testing::Rng rng(47);
  auto u = testing::random_universe(rng, {});
  Organization org = build_org(u.scenario);
  std::vector<AccessRequest> a, b;
  for (int i = 0; i < 30; ++i) a.push_back(testing::random_request(rng, u));
  for (int i = 0; i < 20; ++i) b.push_back(testing::random_request(rng, u));
  std::vector<AccessRequest> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());

  auto da = simulate(org, a);
  auto db = simulate(org, b);
  auto dab = simulate(org, ab);
  ASSERT_EQ(dab.size(), ab.size());
  for (std::size_t i = 0; i < ab.size(); ++i) {
    EXPECT_EQ(dab[i], authorize(org, ab[i]));
    EXPECT_EQ(dab[i], i < a.size() ? da[i] : db[i - a.size()]);
  }
}

TEST(Simulate, EmptyBatch) {
  Organization org = load_org(kBucketSharing);
  ArchiveSink sink;
  EXPECT_TRUE(simulate(org, {}, &sink).empty());
  EXPECT_EQ(sink.archive().size(), 0u);
}

TEST(Simulate, InvalidRequestEmitsNothingAndNamesIndex) {
  Organization org = load_org(kBucketSharing);
  std::vector<AccessRequest> batch = {
      request("user-1", "111111111111", "s3:GetObject", kBucket),
      request("user-1", "111111111111", "s3:GetObject", kBucket),
      request("user-1", "111111111111", "s3:Get*", kBucket),
  };
  ArchiveSink sink;
  try {
    simulate(org, batch, &sink);
    FAIL();
  } catch (const InvalidRequestError& e) {
    EXPECT_TRUE(contains(e.what(), "request 2")) << e.what();
  }
  EXPECT_EQ(sink.archive().size(), 0u);
}

TEST(Simulate, EmitsOneEventPerRequest) {
  Organization org = load_org(kBucketSharing);
  std::vector<AccessRequest> batch = {
      request("user-1", "111111111111", "s3:GetObject", kBucket),
      request("user-2", "222222222222", "s3:GetObject", kBucket),
  };
  batch[1].time = parse_timestamp("2024-05-01T00:00:00Z");
  ArchiveSink sink;
  simulate(org, batch, &sink);
  auto events = sink.archive().events();
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(format_timestamp(events[0].time), "2024-01-01T00:00:00Z");
  EXPECT_EQ(events[0].verdict, Verdict::kAllow);
  EXPECT_EQ(format_timestamp(events[1].time), "2024-05-01T00:00:00Z");
  EXPECT_EQ(events[1].verdict, Verdict::kDeny);
  EXPECT_EQ(events[1].kind, EventKind::kApiCall);
  EXPECT_EQ(events[1].source, "222222222222");
}

TEST(WireFormat, RequestRoundTrip) {
  AccessRequest r = request("user-1", "111111111111", "s3:GetObject", kBucket);
  r.context["env"] = "prod";
  EXPECT_EQ(request_from_json(nlohmann::json::parse(request_to_json(r).dump())), r);
  r.time = parse_timestamp("2024-02-03T04:05:06Z");
  EXPECT_EQ(request_from_json(nlohmann::json::parse(request_to_json(r).dump())), r);
  EXPECT_THROW(request_from_json(nlohmann::json::parse(R"({"user":"u"})")),
               ParseError);
  EXPECT_THROW(request_from_json(nlohmann::json::parse(
                   R"({"user":"u","account":"a","action":"s:A","resource":"r","x":"1"})")),
               ParseError);
}

TEST(WireFormat, DecisionJson) {
  Organization org = load_org(kBucketSharing);
  auto d = authorize(org, request("user-3", "333333333333", "s3:GetObject", kBucket));
  EXPECT_EQ(decision_to_json(d, false).dump(),
            R"({"verdict":"Allow","reason":"CrossAccountAllow"})");
  auto full = decision_to_json(d, true);
  EXPECT_EQ(full["rule"], 5);
  EXPECT_EQ(full["trace"].size(), 2u);
}

}  // namespace
}  // namespace iamsim
