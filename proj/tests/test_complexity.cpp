// Copyright 2026 The beamsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "beamsim/complexity.hpp"

using namespace beamsim;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<ComplexityRow> parse(const std::string& text) {
    std::istringstream is(text);
    return parse_complexity_spec(is);
}

}  // namespace

TEST(Params, ProposedModel) {
    const auto spec = proposed_model_spec();
    EXPECT_EQ(count_params(spec), 1088);
    EXPECT_EQ(count_flops(spec), 1088);
    EXPECT_EQ(model_size_bits(1088, 32), 34816);
    EXPECT_EQ(format_mbit_ceil(34816), "0.04");
}

TEST(Params, FcNnReference) {
    const auto spec = fc_nn_reference_spec();
    EXPECT_EQ(count_params(spec), 17728);
    EXPECT_EQ(count_flops(spec), 17728);
    EXPECT_NEAR(static_cast<double>(model_size_bits(17728, 32)) / 1e6, 0.567, 1e-3);
}

TEST(Params, FcFormulaProperty) {
    for (long i = 1; i < 40; i += 3)
        for (long o = 1; o < 90; o += 7) {
            const std::vector<LayerSpec> s{FcLayer{i, o}};
            EXPECT_EQ(count_params(s), (i + 1) * o);
        }
}

TEST(Params, ConvLayers) {
    const std::vector<LayerSpec> c{ConvLayer{8, 3, 3, 1, 16, 16}};
    EXPECT_EQ(count_params(c), 80);
    EXPECT_EQ(count_flops(c), 18432);
    EXPECT_EQ(model_size_bits(1, 1), 1);
    const std::vector<LayerSpec> bad{ConvLayer{0, 3, 3, 1, 1, 1}};
    EXPECT_THROW(count_params(bad), Error);
}

TEST(Scaling, InferenceAndTraining) {
    const auto s = proposed_model_spec();
    EXPECT_DOUBLE_EQ(inference_flops(s, 5000), 5000.0 * 1088);
    EXPECT_DOUBLE_EQ(training_flops(s, 100, 17500), 2.0 * 100 * 17500 * 1088);
}

TEST(Format, SciAndMbit) {
    EXPECT_EQ(format_sci3(1088), "1.09e3");
    EXPECT_EQ(format_sci3(17728), "1.77e4");
    EXPECT_EQ(format_sci3(47300000), "4.73e7");
    EXPECT_EQ(format_mbit_ceil(10000), "0.01");
    EXPECT_EQ(format_mbit_ceil(10001), "0.02");
    EXPECT_EQ(format_mbit_ceil(567296), "0.57");
}

TEST(Table, ShippedSpecMatchesGolden) {
    std::ifstream is(std::string(BEAMSIM_SOURCE_DIR) + "/configs/complexity_table.spec");
    ASSERT_TRUE(is.good());
    EXPECT_EQ(render_complexity_table(parse_complexity_spec(is)),
              slurp(std::string(BEAMSIM_SOURCE_DIR) + "/tests/golden/complexity_table.csv"));
}

TEST(Table, ProposedSpecRow) {
    std::ifstream is(std::string(BEAMSIM_SOURCE_DIR) + "/configs/proposed.spec");
    const auto rows = parse_complexity_spec(is);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].params, 1088);
    EXPECT_EQ(rows[0].size_mbit, "0.04");
    EXPECT_EQ(rows[0].flops, 1088);
    EXPECT_EQ(rows[0].source, "computed");
}

TEST(Table, LiteratureRowsVerbatim) {
    const auto rows = parse("literature\n");
    ASSERT_EQ(rows.size(), 4u);
    for (const auto& r : rows) EXPECT_EQ(r.source, "literature");
    EXPECT_EQ(rows[0].params, 17728);
    EXPECT_EQ(rows[0].size_mbit, "0.5");
    EXPECT_EQ(rows[1].params, 352034);
    EXPECT_EQ(rows[1].flops, 1370000);
    EXPECT_EQ(rows[2].params, 67008);
    EXPECT_EQ(rows[2].flops, 332000);
    EXPECT_EQ(rows[3].params, 739073);
    EXPECT_EQ(rows[3].flops, 47300000);
}

TEST(Parse, Errors) {
    EXPECT_THROW(parse(""), Error);
    EXPECT_THROW(parse("# only a comment\n"), Error);
    EXPECT_THROW(parse("model x\n"), Error);
    EXPECT_THROW(parse("fc 16\n"), Error);
    EXPECT_THROW(parse("fc 16 64 3\n"), Error);
    EXPECT_THROW(parse("dense 16 64\n"), Error);
    EXPECT_THROW(parse("fc 0 64\n"), Error);
    try {
        parse("fc 16 64\nbogus\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Parse, MultipleModelsAndConv) {
    const auto rows = parse("model a\nfc 16 64\nmodel b\nconv 8 3 3 1 16 16\nfc 10 4\n");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].model, "a");
    EXPECT_EQ(rows[1].params, 80 + 44);
    EXPECT_EQ(rows[1].flops, 18432 + 44);
}
