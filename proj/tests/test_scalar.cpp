#include <gtest/gtest.h>

#include "mot/scalar.hpp"

using mot::Extended;
using mot::Mode;
using mot::Scalar;

TEST(Scalar, ParsesRationalsAndDecimalsExactly) {
  EXPECT_EQ(Scalar::parse("2/4").str(), "1/2");
  EXPECT_EQ(Scalar::parse("-6/-4").str(), "3/2");
  EXPECT_EQ(Scalar::parse("0.125").str(), "1/8");
  EXPECT_EQ(Scalar::parse("-1.25e-3").str(), "-1/800");
  EXPECT_EQ(Scalar::parse("7").str(), "7");
  EXPECT_EQ(Scalar::parse("0.1"), Scalar::exact(1, 10));
}

TEST(Scalar, RejectsMalformedText) {
  EXPECT_THROW(Scalar::parse(""), mot::ParseError);
  EXPECT_THROW(Scalar::parse("1/0"), mot::ParseError);
  EXPECT_THROW(Scalar::parse("abc"), mot::ParseError);
  EXPECT_THROW(Scalar::parse("1.2.3"), mot::ParseError);
}

TEST(Scalar, ExactArithmeticHasNoRounding) {
  Scalar third = Scalar::exact(1, 3);
  EXPECT_EQ(third + third + third, Scalar(1));
  EXPECT_EQ((Scalar::exact(2, 7) * Scalar::exact(7, 2)).str(), "1");
  EXPECT_EQ((Scalar(1) / Scalar(3) - third).sign(), 0);
  EXPECT_THROW(Scalar(1) / Scalar(0), mot::Error);
}

TEST(Scalar, MixedModesPromoteToApprox) {
  Scalar a = Scalar::exact(1, 2) + Scalar::approx(0.25);
  EXPECT_EQ(a.mode(), Mode::approx);
  EXPECT_DOUBLE_EQ(a.to_double(), 0.75);
  EXPECT_THROW(a.rational(), mot::Error);
}

TEST(Scalar, ToleranceOnlyAffectsApprox) {
  EXPECT_TRUE(mot::is_zero(Scalar::approx(1e-12)));
  EXPECT_FALSE(mot::is_zero(Scalar::exact(1, 1000000000000L)));
  EXPECT_EQ(mot::sign(Scalar::approx(-1e-3)), -1);
}

TEST(Scalar, OrderingIsTotal) {
  EXPECT_LT(Scalar::exact(1, 3), Scalar::exact(1, 2));
  EXPECT_GT(Scalar(-1), Scalar(-2));
  EXPECT_EQ(mot::max(Scalar(1), Scalar::exact(3, 2)), Scalar::exact(3, 2));
  EXPECT_EQ(mot::min(Scalar(1), Scalar::exact(3, 2)), Scalar(1));
}

TEST(Extended, ParsesInfinities) {
  EXPECT_TRUE(Extended::parse("inf").is_pos_inf());
  EXPECT_TRUE(Extended::parse("+inf").is_pos_inf());
  EXPECT_TRUE(Extended::parse("-inf").is_neg_inf());
  EXPECT_EQ(Extended::parse("3/6").value(), Scalar::exact(1, 2));
  EXPECT_THROW(Extended::pos_inf().value(), mot::Error);
  EXPECT_EQ(Extended::neg_inf().str(), "-inf");
}

TEST(SqrtFloor, ExactOnPerfectSquares) {
  EXPECT_EQ(mot::sqrt_floor(Scalar::exact(9, 16)), Scalar::exact(3, 4));
  EXPECT_EQ(mot::sqrt_floor(Scalar(0)), Scalar(0));
}

TEST(SqrtFloor, RoundsDownOtherwise) {
  Scalar r = mot::sqrt_floor(Scalar(2), 20);
  EXPECT_LE(r * r, Scalar(2));
  Scalar next = r + Scalar::exact(1, 1 << 20);
  EXPECT_GT(next * next, Scalar(2));
}
