#include <doctest.h>

#include <algorithm>

#include "fedrkg/config.hpp"

using namespace fedrkg;

TEST_SUITE("config") {

TEST_CASE("dataset presets") {
  ExperimentConfig c;
  c.dataset = "amazon-video";
  c.apply_dataset_defaults();
  CHECK(c.hp.beta == 0.99);
  CHECK(c.hp.rounds == 1000);
  CHECK(c.min_interactions == 10);
  CHECK(c.format == "csv");

  c.dataset = "lastfm-2k";
  c.apply_dataset_defaults();
  CHECK(c.hp.beta == 0.999);
  CHECK(c.hp.rounds == 3000);
  CHECK(c.format == "tsv");

  c.dataset = "ml-1m";
  c.apply_dataset_defaults();
  CHECK(c.min_interactions == 20);
  CHECK(c.format == "ml1m");

  // Shared defaults stay in place.
  CHECK(c.hp.dim == 32);
  CHECK(c.hp.batch_size == 256);
  CHECK(c.hp.negatives_per_positive == 4);
  CHECK(c.hp.guidance_interval == 100);
  CHECK(c.hp.local_epochs == 1);
  CHECK(c.hp.gate_epochs == 5);
}

TEST_CASE("validation lists every problem at once") {
  ExperimentConfig c;
  c.hp.beta = 1.5;
  c.hp.eta = 0.0;
  c.eval_ks.clear();
  const auto problems = c.validate();
  REQUIRE(problems.size() >= 3);
  CHECK(std::any_of(problems.begin(), problems.end(), [](const auto& p) {
    return p.find("beta") != std::string::npos &&
           p.find("[0, 1]") != std::string::npos;
  }));
  CHECK(std::any_of(problems.begin(), problems.end(), [](const auto& p) {
    return p.find("eta") != std::string::npos;
  }));
  CHECK(std::any_of(problems.begin(), problems.end(), [](const auto& p) {
    return p.find("eval_ks") != std::string::npos;
  }));

  ExperimentConfig good;
  CHECK(good.validate().empty());
}

TEST_CASE("regimes parse and format") {
  for (const Regime regime :
       {Regime::full_replacement, Regime::local_only,
        Regime::knowledge_guidance, Regime::adaptive_guidance})
    CHECK(parse_regime(regime_name(regime)) == regime);
  CHECK_THROWS_AS(parse_regime("federated_dropout"), std::runtime_error);
}

TEST_CASE("json round-trip") {
  ExperimentConfig c;
  c.dataset = "filmtrust";
  c.apply_dataset_defaults();
  c.hp.seed = 99;
  c.hp.eta = 0.03;
  c.regime = Regime::knowledge_guidance;
  c.privacy.enabled = true;
  c.privacy.noise_stddev = 0.002;
  c.eval_ks = {1, 5, 10};
  c.eval_guidance_boundaries = true;
  c.workers = 4;
  CHECK(ExperimentConfig::from_json_string(c.to_json_string()) == c);
}

TEST_CASE("run ids are deterministic and ignore presentation fields") {
  ExperimentConfig a;
  a.hp.seed = 3;
  ExperimentConfig b = a;
  CHECK(a.run_id() == b.run_id());

  b.workers = 8;
  b.output_dir = "elsewhere";
  CHECK(a.run_id() == b.run_id());

  b.hp.seed = 4;
  CHECK(a.run_id() != b.run_id());
  b.hp.seed = 3;
  b.regime = Regime::local_only;
  CHECK(a.run_id() != b.run_id());
}

}  // TEST_SUITE
