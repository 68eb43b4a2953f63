#include <string>

#include <gtest/gtest.h>

#include "asyncloc/errors.hpp"
#include "asyncloc/io.hpp"
#include "asyncloc/rng.hpp"
#include "asyncloc/scenario.hpp"
#include "asyncloc/simulate.hpp"

namespace asyncloc {
namespace {

const char* kMinimal = R"(
name: tiny
dimension: 2
noise_std: 1e-9
delay: {mean: 1e-6, std: 5e-9}
anchor_std: 0.1
nodes:
  - {id: 1, role: anchor, mean: [0, 0]}
  - {id: 2, role: anchor, mean: [8, 0], std: 0.3}
  - {id: 3, role: auxiliary, truth: [4, 4], init: [3, 3]}
  - {id: 4, role: receiver, truth: [2, 5]}
sequence: [1, 2, 3, 1]
)";

std::string expect_config_error(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError";
  return {};
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  EXPECT_NE(pos, std::string::npos) << from;
  return text.replace(pos, from.size(), to);
}

TEST(Scenario, ParsesMinimalFile) {
  const Scenario s = parse_scenario(kMinimal);
  EXPECT_EQ(s.name, "tiny");
  EXPECT_EQ(s.node_count(), 4);
  EXPECT_DOUBLE_EQ(s.node(1).prior_std, 0.1);
  EXPECT_DOUBLE_EQ(s.node(2).prior_std, 0.3);
  ASSERT_TRUE(s.node(3).init.has_value());
  EXPECT_EQ((*s.node(3).init)(0), 3.0);
  EXPECT_EQ(s.sequence, (Sequence{1, 2, 3, 1}));
  EXPECT_EQ(s.anchor_ids(), (std::vector<int>{1, 2}));
  EXPECT_EQ(s.unknown_ids(), (std::vector<int>{3, 4}));
  EXPECT_DOUBLE_EQ(s.speed, kSpeedOfLight);
}

TEST(Scenario, FormatRoundTrip) {
  for (const Scenario& s :
       {nominal_scenario(), parse_scenario(kMinimal),
        with_random_auxiliaries(nominal_scenario(), 6, 3)}) {
    const std::string text = format_scenario(s);
    const Scenario back = parse_scenario(text);
    EXPECT_EQ(format_scenario(back), text);
    ASSERT_EQ(back.node_count(), s.node_count());
    for (int id = 1; id <= s.node_count(); ++id) {
      EXPECT_EQ(back.node(id).position, s.node(id).position);
    }
    EXPECT_EQ(back.sequence, s.sequence);
    EXPECT_EQ(back.noise_std, s.noise_std);
  }
}

TEST(Scenario, FieldLevelErrors) {
  EXPECT_NE(expect_config_error("[1, 2]").find("mapping"), std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "dimension: 2", "dimension: 4"))
                .find("dimension"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "noise_std: 1e-9", "noise_std: abc"))
                .find("noise_std"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, ", truth: [2, 5]", "")).find("truth"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "[1, 2, 3, 1]", "[1, 2, 1]"))
                .find("sequence"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "[1, 2, 3, 1]", "[1, 4, 3, 1]"))
                .find("sequence"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "role: receiver", "role: auxiliary"))
                .find("receiver"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "role: anchor, mean: [8, 0]",
                                        "role: pilot, mean: [8, 0]"))
                .find("role"),
            std::string::npos);
  EXPECT_NE(expect_config_error(replace(kMinimal, "mean: [0, 0]", "mean: [0, 0, 1]"))
                .find("nodes[0]"),
            std::string::npos);
}

TEST(Scenario, MissingFileIsConfigError) {
  EXPECT_THROW(load_scenario("/nonexistent/dir/x.scenario"), ConfigError);
}

TEST(Scenario, RandomAuxiliariesRespectSeparation) {
  const Scenario s = with_random_auxiliaries(nominal_scenario(), 10, 7);
  EXPECT_EQ(s.node_count(), 16);
  EXPECT_EQ(s.node(16).role, NodeRole::Receiver);
  EXPECT_EQ(s.auxiliary_ids().size(), 11u);
  for (int a = 1; a <= 16; ++a) {
    for (int b = a + 1; b <= 16; ++b) {
      EXPECT_GE((s.node(a).position - s.node(b).position).norm(), 1.0 - 1e-12);
    }
  }
  EXPECT_EQ(format_scenario(s),
            format_scenario(with_random_auxiliaries(nominal_scenario(), 10, 7)));
}

TEST(Observations, RoundTripIsExact) {
  const Scenario s = nominal_scenario();
  auto rng = make_stream(1, StreamDomain::Trial, 0);
  const ObservationSet obs = synthesize(sample_truth(s, rng), s, rng);
  const ObservationSet back = parse_observations(format_observations(obs), s);
  EXPECT_EQ(back.y, obs.y);
  EXPECT_EQ(back.sequence, obs.sequence);
  EXPECT_EQ(back.h, obs.h);
  EXPECT_EQ(back.q, obs.q);
}

TEST(Observations, MalformedInputs) {
  const Scenario s = nominal_scenario();
  EXPECT_THROW(parse_observations("", s), ConfigError);
  EXPECT_THROW(parse_observations("a,b,c\n", s), ConfigError);
  EXPECT_THROW(parse_observations("index,from,to,interval_s\n", s), ConfigError);
  EXPECT_THROW(parse_observations("index,from,to,interval_s\n0,1,2,x\n", s), ConfigError);
  EXPECT_THROW(parse_observations("index,from,to,interval_s\n0,1,2,1e-6\n1,3,1,1e-6\n", s),
               ConfigError);
  EXPECT_THROW(parse_observations("index,from,to,interval_s\n0,1,6,1e-6\n", s), ConfigError);
  EXPECT_NO_THROW(parse_observations("index,from,to,interval_s\n0,1,2,1e-6\n", s));
}

TEST(Report, EstimateListsEveryCoordinate) {
  EstimateResult r;
  r.theta_hat = Vector::Zero(StateVector::length(2, 3));
  const std::string text = format_estimate(r, 2, 3);
  EXPECT_EQ(text.rfind("quantity,node_id,axis,value\n", 0), 0u);
  EXPECT_NE(text.find("position,3,y,"), std::string::npos);
  EXPECT_NE(text.find("delay,2,,"), std::string::npos);
  EXPECT_EQ(text.find("delay,3,,"), std::string::npos);
  EXPECT_NE(text.find("status,,,max_iterations"), std::string::npos);
}

}  // namespace
}  // namespace asyncloc
