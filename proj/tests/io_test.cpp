#include "mixattack/io.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "mixattack/oracle.hpp"
#include "mixattack/synth.hpp"
#include "test_support.hpp"

using namespace mixattack;

namespace {

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("mixattack_io_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) { return (dir_ / name).string(); }
  std::filesystem::path dir_;
};

TEST_F(IoTest, BinaryInstanceRoundTripsBitExactly) {
  RandomMixtureSpec spec;
  spec.d = 7;
  spec.m = 3;
  RandomInstance inst = sample_random_mixture(spec, 99);
  save_instance(path("bin.json"), inst.mixture, inst.point);
  LoadedInstance loaded = load_instance(path("bin.json"));
  ASSERT_TRUE(std::holds_alternative<BinaryInstance>(loaded));
  const auto& b = std::get<BinaryInstance>(loaded);
  ASSERT_EQ(b.mixture.size(), 3);
  EXPECT_TRUE((b.mixture.weights.array() == inst.mixture.weights.array()).all());
  for (int i = 0; i < 3; ++i) {
    EXPECT_TRUE((b.mixture.classifiers[i].theta.array() ==
                 inst.mixture.classifiers[i].theta.array())
                    .all());
    EXPECT_EQ(b.mixture.classifiers[i].bias, inst.mixture.classifiers[i].bias);
  }
  EXPECT_TRUE((b.point.x.array() == inst.point.x.array()).all());
  EXPECT_EQ(b.point.label, inst.point.label);
}

TEST_F(IoTest, MulticlassInstanceRoundTripsBitExactly) {
  Rng rng(7);
  std::vector<SoftmaxLinearClassifier> cs;
  for (int i = 0; i < 2; ++i) {
    Eigen::MatrixXd w(3, 4);
    for (int r = 0; r < 3; ++r) w.row(r) = rng.gaussian_vector(4).transpose();
    cs.emplace_back(w, rng.gaussian_vector(3));
  }
  Vec q(2);
  q << 0.25, 0.75;
  Mixture<SoftmaxLinearClassifier> mix(cs, q);
  LabeledPoint p{rng.gaussian_vector(4), 2};
  save_instance(path("mc.json"), mix, p);
  LoadedInstance loaded = load_instance(path("mc.json"));
  ASSERT_TRUE(std::holds_alternative<MulticlassInstance>(loaded));
  const auto& mc = std::get<MulticlassInstance>(loaded);
  ASSERT_EQ(mc.mixture.size(), 2);
  EXPECT_EQ(mc.mixture.classifiers[0].num_classes(), 3);
  for (int i = 0; i < 2; ++i) {
    EXPECT_TRUE((mc.mixture.classifiers[i].W.array() ==
                 mix.classifiers[i].W.array())
                    .all());
    EXPECT_TRUE(
        (mc.mixture.classifiers[i].c.array() == mix.classifiers[i].c.array())
            .all());
  }
  EXPECT_EQ(mc.point.label, 2);
}

TEST_F(IoTest, AwkwardDoublesSurviveTheRoundTrip) {
  // Shortest-round-trip serialization must reproduce these exactly.
  Vec theta(3);
  theta << 1.0 / 3.0, 0.1, 1e-300;
  Mixture<LinearClassifier> mix({LinearClassifier(theta, -0.3)}, Vec::Ones(1));
  LabeledPoint p{Vec::Zero(3), -1};
  save_instance(path("awkward.json"), mix, p);
  LoadedInstance loaded = load_instance(path("awkward.json"));
  const auto& b = std::get<BinaryInstance>(loaded);
  EXPECT_EQ(b.mixture.classifiers[0].theta[0], 1.0 / 3.0);
  EXPECT_EQ(b.mixture.classifiers[0].theta[1], 0.1);
  EXPECT_EQ(b.mixture.classifiers[0].theta[2], 1e-300);
  EXPECT_EQ(b.mixture.classifiers[0].bias, -0.3);
}

TEST_F(IoTest, MissingFileAndMalformedJsonReportThePath) {
  try {
    load_instance(path("absent.json"));
    FAIL() << "expected ContractViolation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("absent.json"), std::string::npos);
  }
  write_text_file(path("broken.json"), "{ not json");
  try {
    load_instance(path("broken.json"));
    FAIL() << "expected ContractViolation";
  } catch (const ContractViolation& e) {
    EXPECT_NE(std::string(e.what()).find("broken.json"), std::string::npos);
  }
}

TEST_F(IoTest, StructurallyInvalidInstancesRejected) {
  write_text_file(path("nokind.json"), "{\"d\": 2}");
  EXPECT_THROW(load_instance(path("nokind.json")), ContractViolation);
  write_text_file(path("badkind.json"),
                  "{\"kind\": \"quadratic\", \"d\": 2}");
  EXPECT_THROW(load_instance(path("badkind.json")), ContractViolation);
  // Weights that do not sum to one must be rejected by the mixture itself.
  write_text_file(
      path("badweights.json"),
      R"({"kind":"linear","d":1,"k":2,
          "classifiers":[{"theta":[1.0],"bias":-1.0}],
          "weights":[0.5],
          "point":{"x":[0.0],"y":-1}})");
  EXPECT_THROW(load_instance(path("badweights.json")), ContractViolation);
}

TEST_F(IoTest, ReportJsonCarriesTheLatticeVerbatim) {
  mixtest::Fixture fx = mixtest::make_fixture('c');
  LatticeReport rep = enumerate_lattice(fx.mixture, fx.point, fx.budget);
  nlohmann::json j = report_to_json(rep);
  EXPECT_EQ(j["m"], 2);
  EXPECT_EQ(j["oracle_grade"], true);
  EXPECT_DOUBLE_EQ(j["optimal_score"].get<double>(), 0.6);
  ASSERT_EQ(j["statuses"].size(), 4u);
  EXPECT_EQ(j["statuses"][0]["feasible"], true);
  EXPECT_EQ(j["statuses"][3]["feasible"], false);
  ASSERT_EQ(j["maximal_regions"].size(), 2u);
  EXPECT_EQ(j["maximal_regions"][0], nlohmann::json::array({0}));
  EXPECT_EQ(j["maximal_regions"][1], nlohmann::json::array({1}));
  // Fingerprint is fixed-width hex.
  std::string fp = j["fingerprint"].get<std::string>();
  EXPECT_EQ(fp.size(), 16u);
  EXPECT_EQ(fp.find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST(FormatDouble, SurvivesStrtodRoundTrip) {
  for (double v : {1.0 / 3.0, 0.1, 1e-300, -2.5e17, 0.0,
                   123456789.123456789, 6.02214076e23}) {
    std::string s = format_double(v);
    EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
  }
}

TEST(Csv, LayoutAndTimestampStripping) {
  CsvTable t;
  t.meta = {{"eps", "0.8"}, {"norm", "l2"}};
  t.header = {"a", "b"};
  t.rows = {{"1", "2"}, {"3", "4"}};
  std::string s = csv_to_string(t);
  EXPECT_EQ(s.rfind("# generated_at=", 0), 0u);  // first line
  std::string stripped = strip_timestamp_lines(s);
  EXPECT_EQ(stripped, "# eps=0.8\n# norm=l2\na,b\n1,2\n3,4\n");
  // Stripping is idempotent and only removes timestamp lines.
  EXPECT_EQ(strip_timestamp_lines(stripped), stripped);
}

}  // namespace
