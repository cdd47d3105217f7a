#include "xsnr/core.hpp"

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

namespace xsnr {
namespace {

TokenizedText make_text(const std::string& id, std::size_t n) {
  TokenizedText t{id, {}, std::nullopt};
  for (std::size_t i = 0; i < n; ++i) t.tokens.emplace_back("w" + std::to_string(i));
  return t;
}

AttentionMatrix two_by_three() {
  return AttentionMatrix("t", {"a", "b"}, {{0, 1, 2}, {2, 1, 0}});
}

TEST(ValidateMatrix, AcceptsConsistentDimensions) {
  const auto m = two_by_three();
  EXPECT_NO_THROW(validate_matrix(m, make_text("t", 3)));
}

TEST(ValidateMatrix, RejectsRowLengthMismatch) {
  EXPECT_THROW(validate_matrix(two_by_three(), make_text("t", 4)), ValidationError);
}

TEST(ValidateMatrix, RejectsNonFiniteWeights) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(AttentionMatrix("t", {"a"}, {{0.0, nan, 1.0}}), ValidationError);
  EXPECT_THROW(AttentionMatrix("t", {"a"}, {{std::numeric_limits<double>::infinity()}}),
               ValidationError);
}

TEST(ValidateMatrix, RejectsEmptyAndRaggedMatrices) {
  EXPECT_THROW(AttentionMatrix("t", {}, std::vector<std::vector<double>>{}), ValidationError);
  EXPECT_THROW(AttentionMatrix("t", {"a"}, {{}}), ValidationError);
  EXPECT_THROW(AttentionMatrix("t", {"a", "b"}, {{1, 2}, {1}}), ValidationError);
  EXPECT_THROW(AttentionMatrix("t", {"a"}, {{1, 2}, {1, 2}}), ValidationError);
}

TEST(ValidateMatrix, RejectsForeignText) {
  EXPECT_THROW(validate_matrix(two_by_three(), make_text("other", 3)), ValidationError);
}

TEST(ValidateMatrix, Idempotent) {
  const auto text = make_text("t", 3);
  const auto m = two_by_three();
  const AttentionMatrix once = validate_matrix(m, text);
  const AttentionMatrix twice = validate_matrix(once, text);
  EXPECT_EQ(once, m);
  EXPECT_EQ(twice, m);
}

TEST(AttentionMatrix, RowSelection) {
  const auto m = two_by_three();
  const std::vector<std::size_t> idx{1, 1, 0};
  const auto s = m.select_rows(idx);
  EXPECT_EQ(s.n_models(), 3u);
  EXPECT_EQ(s.model_ids(), (std::vector<std::string>{"b", "b", "a"}));
  EXPECT_DOUBLE_EQ(s.at(2, 2), 2.0);
  EXPECT_EQ(m.prefix(1).n_models(), 1u);
  EXPECT_THROW(m.prefix(3), ValidationError);

  const std::vector<std::string> keep{"b"};
  EXPECT_EQ(m.restrict_to(keep).model_ids(), keep);
  const std::vector<std::string> unknown{"zz"};
  EXPECT_THROW(m.restrict_to(unknown), ValidationError);
}

TEST(AttentionMatrix, NegativeWeightsKept) {
  AttentionMatrix m("t", {"a"}, {{-0.5, 0.25}});
  EXPECT_DOUBLE_EQ(m.at(0, 0), -0.5);
}

class CompatibleInputsTest : public ::testing::Test {
 protected:
  std::vector<TokenizedText> texts{make_text("t1", 2), make_text("t2", 2), make_text("t3", 2)};
  std::vector<ModelRecord> models{{"m1", 1, 0.9, 100}, {"m2", 2, 0.9, 100}};
};

TEST_F(CompatibleInputsTest, HandEnumeratedTable) {
  PredictionTable p;
  p.set("t1", "m1", 1);
  p.set("t1", "m2", 1);
  p.set("t2", "m1", 0);
  p.set("t2", "m2", 1);
  p.set("t3", "m1", 0);
  p.set("t3", "m2", 0);
  EXPECT_EQ(compatible_inputs(p, texts, models), (std::vector<std::string>{"t1", "t3"}));
}

TEST_F(CompatibleInputsTest, SingleModelKeepsEveryText) {
  PredictionTable p;
  p.set("t1", "m1", 1);
  p.set("t2", "m1", 0);
  p.set("t3", "m1", 1);
  const std::vector<ModelRecord> one{models.front()};
  EXPECT_EQ(compatible_inputs(p, texts, one), (std::vector<std::string>{"t1", "t2", "t3"}));
}

TEST_F(CompatibleInputsTest, MissingPredictionIsAnError) {
  PredictionTable p;
  p.set("t1", "m1", 1);
  EXPECT_THROW(compatible_inputs(p, texts, models), ValidationError);
}

TEST(Token, NormalizationIsNfcLowercase) {
  EXPECT_EQ(Token("On").normalized, "on");
  // "E" + combining acute accent composes to U+00E9
  EXPECT_EQ(Token("E\xCC\x81T\xC3\x89").normalized, "\xC3\xA9t\xC3\xA9");
  EXPECT_EQ(Token("\xC3\x89t\xC3\xA9").normalized, "\xC3\xA9t\xC3\xA9");
  EXPECT_EQ(normalize_surface("«"), "«");
}

TEST(Token, Utf8Length) {
  EXPECT_EQ(utf8_length("abc"), 3u);
  EXPECT_EQ(utf8_length("\xC3\xA9t\xC3\xA9"), 3u);
  EXPECT_EQ(utf8_length(""), 0u);
}

TEST(TokenizedText, LengthBuckets) {
  EXPECT_EQ(length_bucket_for(49), LengthBucket::kShort);
  EXPECT_EQ(length_bucket_for(50), LengthBucket::kMedium);
  EXPECT_EQ(length_bucket_for(400), LengthBucket::kMedium);
  EXPECT_EQ(length_bucket_for(401), LengthBucket::kLong);
  EXPECT_EQ(to_string(make_text("x", 3).length_bucket()), "short");
}

TEST(ModelRecord, Validation) {
  EXPECT_NO_THROW((ModelRecord{"m", 0, 0.0, 1}.validate()));
  EXPECT_NO_THROW((ModelRecord{"m", 0, 1.0, 1}.validate()));
  EXPECT_THROW((ModelRecord{"m", 0, 1.01, 1}.validate()), ValidationError);
  EXPECT_THROW((ModelRecord{"m", 0, -0.1, 1}.validate()), ValidationError);
  EXPECT_THROW((ModelRecord{"m", 0, 0.5, 0}.validate()), ValidationError);
}

}  // namespace
}  // namespace xsnr
