#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "ruled.hpp"

#include <gtest/gtest.h>

#include <initializer_list>
#include <memory>

namespace hbtest {

inline hyperbend::Vec vec(std::initializer_list<double> v) {
  hyperbend::Vec out(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

inline std::shared_ptr<hyperbend::RuledChart> r1() {
  static auto chart = hyperbend::integrate_frame(hyperbend::r1_spec(), "R1");
  return chart;
}

inline std::shared_ptr<hyperbend::RuledChart> r2() {
  static auto chart = hyperbend::integrate_frame(hyperbend::r2_spec(), "R2");
  return chart;
}

inline hyperbend::Box ruled_patch() { return hyperbend::Box(vec({0, -1, -1, -1}), vec({1, 1, 1, 1})); }

}  // namespace hbtest

#define EXPECT_HB_ERROR(stmt, expected_code)                                   \
  do {                                                                         \
    try {                                                                      \
      stmt;                                                                    \
      ADD_FAILURE() << "expected " << hyperbend::error_code_name(expected_code); \
    } catch (const hyperbend::Error& e) {                                      \
      EXPECT_EQ(e.code(), expected_code) << e.what();                          \
    }                                                                          \
  } while (0)
