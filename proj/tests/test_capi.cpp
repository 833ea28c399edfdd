#include "hyperbend/hyperbend.h"

#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STRNE(hb_version(), "");
  EXPECT_STREQ(hb_status_name(HB_OK), "OK");
  EXPECT_STREQ(hb_status_name(HB_ERR_UNKNOWN_SCENARIO), "UnknownScenario");
  EXPECT_STREQ(hb_status_name(HB_ERR_BUFFER_TOO_SMALL), "BufferTooSmall");
  EXPECT_STREQ(hb_status_name(static_cast<hb_status>(77)), "Unknown");
}

TEST(CApi, ScenarioRegistry) {
  ASSERT_GE(hb_scenario_count(), 6);
  const char* name = nullptr;
  ASSERT_EQ(hb_scenario_name(0, &name), HB_OK);
  EXPECT_NE(name, nullptr);
  EXPECT_EQ(hb_scenario_name(hb_scenario_count(), &name), HB_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(hb_scenario_name(0, nullptr), HB_ERR_NULL_ARGUMENT);

  size_t needed = 0;
  char small[4];
  EXPECT_EQ(hb_scenario_describe("R1", small, sizeof small, &needed), HB_ERR_BUFFER_TOO_SMALL);
  ASSERT_GT(needed, sizeof small);
  std::vector<char> buf(needed);
  ASSERT_EQ(hb_scenario_describe("R1", buf.data(), buf.size(), &needed), HB_OK);
  EXPECT_NE(std::string(buf.data()).find("\"R1\""), std::string::npos);
  EXPECT_EQ(hb_scenario_describe("nope", buf.data(), buf.size(), &needed), HB_ERR_UNKNOWN_SCENARIO);
  EXPECT_NE(std::string(hb_last_error()).find("nope"), std::string::npos);
}

TEST(CApi, ChartGeometry) {
  hb_chart* chart = nullptr;
  ASSERT_EQ(hb_chart_from_scenario("graph-rank4", &chart), HB_OK);
  ASSERT_EQ(hb_chart_dim(chart), 4);
  const double p[4] = {0.1, -0.2, 0.3, 0.0};
  double f[5];
  ASSERT_EQ(hb_chart_eval(chart, p, f), HB_OK);
  EXPECT_NEAR(f[4], 0.14, 1e-15);
  double shape[16], principal[4];
  int nullity = -1;
  ASSERT_EQ(hb_chart_geometry(chart, p, shape, principal, &nullity), HB_OK);
  EXPECT_EQ(nullity, 0);
  for (double k : principal) EXPECT_GT(k, 0.0);
  const double outside[4] = {3.0, 0.0, 0.0, 0.0};
  EXPECT_EQ(hb_chart_eval(chart, outside, f), HB_ERR_OUT_OF_DOMAIN);
  EXPECT_EQ(hb_chart_eval(chart, nullptr, f), HB_ERR_NULL_ARGUMENT);
  hb_chart_free(chart);
  EXPECT_EQ(hb_chart_dim(nullptr), -1);
  EXPECT_EQ(hb_chart_from_scenario("nope", &chart), HB_ERR_UNKNOWN_SCENARIO);
}

TEST(CApi, TrivialBendingHasZeroResidual) {
  hb_chart* chart = nullptr;
  ASSERT_EQ(hb_chart_from_scenario("graph-rank4", &chart), HB_OK);
  double D[25] = {0}, w[5] = {1, 2, 3, 4, 5};
  D[0 * 5 + 1] = 0.5, D[1 * 5 + 0] = -0.5, D[2 * 5 + 4] = -0.25, D[4 * 5 + 2] = 0.25;
  hb_bending* b = nullptr;
  ASSERT_EQ(hb_bending_trivial(chart, D, w, &b), HB_OK);
  const double pts[8] = {0.1, 0.2, 0.3, 0.4, -0.5, 0.1, 0.0, 0.7};
  double res = -1;
  ASSERT_EQ(hb_bending_residual(b, pts, 2, &res), HB_OK);
  EXPECT_LT(res, 1e-12);
  double B[16];
  ASSERT_EQ(hb_bending_B(b, pts, B), HB_OK);
  for (double v : B) EXPECT_LT(std::abs(v), 1e-10);
  hb_bending_free(b);
  hb_chart_free(chart);
}

TEST(CApi, ConstructedBending) {
  hb_chart* chart = nullptr;
  ASSERT_EQ(hb_chart_from_scenario("R1", &chart), HB_OK);
  hb_bending* b = nullptr;
  EXPECT_EQ(hb_bending_constructed(chart, "{oops", &b), HB_ERR_PARSE);
  ASSERT_EQ(hb_bending_constructed(chart, "1", &b), HB_OK);
  const double p[4] = {0.4, 0.3, -0.5, 0.6};
  double res = -1, tau[5];
  ASSERT_EQ(hb_bending_residual(b, p, 1, &res), HB_OK);
  EXPECT_LT(res, 1e-7);
  ASSERT_EQ(hb_bending_eval(b, p, tau), HB_OK);
  double norm = 0;
  for (double v : tau) norm += v * v;
  EXPECT_GT(norm, 0.0);
  hb_bending_free(b);
  hb_chart_free(chart);
}

TEST(CApi, RunReportsExitCode) {
  const std::string dir = std::string(::testing::TempDir()) + "hb-capi-run";
  hb_run_options opts{dir.c_str(), 1, 5};
  int code = -1;
  ASSERT_EQ(hb_run_scenario("trivial-check", &opts, &code), HB_OK);
  EXPECT_EQ(code, 0);
  ASSERT_EQ(hb_run_scenario("nope", &opts, &code), HB_OK);
  EXPECT_EQ(code, 1);
  EXPECT_EQ(hb_run_scenario(nullptr, &opts, &code), HB_ERR_NULL_ARGUMENT);
}
