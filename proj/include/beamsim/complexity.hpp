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

#pragma once

#include <cstdio>
#include <istream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "beamsim/common.hpp"

namespace beamsim {

struct FcLayer {
    long n_in = 0;
    long n_out = 0;
};

struct ConvLayer {
    long n_filters = 0;
    long f_h = 0;
    long f_w = 0;
    long f_d = 0;
    long i_h = 0;  // input height/width only enter the FLOP count
    long i_w = 0;
};

using LayerSpec = std::variant<FcLayer, ConvLayer>;

inline void validate(const LayerSpec& l) {
    if (const auto* fc = std::get_if<FcLayer>(&l)) {
        check(fc->n_in > 0 && fc->n_out > 0, "fc layer dimensions must be positive");
    } else {
        const auto& c = std::get<ConvLayer>(l);
        check(c.n_filters > 0 && c.f_h > 0 && c.f_w > 0 && c.f_d > 0 && c.i_h > 0 && c.i_w > 0,
              "conv layer dimensions must be positive");
    }
}

/// Trainable parameters: (n_i + 1) n_o per FC layer, n_f (f_h f_w f_d + 1) per conv layer.
inline long count_params(std::span<const LayerSpec> spec) {
    long total = 0;
    for (const auto& l : spec) {
        validate(l);
        if (const auto* fc = std::get_if<FcLayer>(&l)) {
            total += (fc->n_in + 1) * fc->n_out;
        } else {
            const auto& c = std::get<ConvLayer>(l);
            total += c.n_filters * (c.f_h * c.f_w * c.f_d + 1);
        }
    }
    return total;
}

/// Inference FLOPs per sample: one multiply-accumulate per FC parameter,
/// n_f i_h i_w (f_h f_w f_d) per conv layer.
inline long count_flops(std::span<const LayerSpec> spec) {
    long total = 0;
    for (const auto& l : spec) {
        validate(l);
        if (const auto* fc = std::get_if<FcLayer>(&l)) {
            total += (fc->n_in + 1) * fc->n_out;
        } else {
            const auto& c = std::get<ConvLayer>(l);
            total += c.n_filters * c.i_h * c.i_w * (c.f_h * c.f_w * c.f_d);
        }
    }
    return total;
}

inline long model_size_bits(long params, int precision_bits) {
    check(params > 0 && precision_bits > 0, "model_size_bits: inputs must be positive");
    return params * precision_bits;
}

/// Scaling estimates: inference costs n_d forward passes; training costs
/// a forward and a backward pass of the same order per sample and epoch.
inline double inference_flops(std::span<const LayerSpec> spec, long n_samples) {
    return static_cast<double>(n_samples) * static_cast<double>(count_flops(spec));
}
inline double training_flops(std::span<const LayerSpec> spec, long n_epochs, long n_samples) {
    return 2.0 * static_cast<double>(n_epochs) * inference_flops(spec, n_samples);
}

struct ComplexityReport {
    long params = 0;
    long flops = 0;
    long size_bits = 0;
};

inline ComplexityReport complexity_report(std::span<const LayerSpec> spec, int precision_bits = 32) {
    check(!spec.empty(), "complexity: empty layer spec");
    ComplexityReport r;
    r.params = count_params(spec);
    r.flops = count_flops(spec);
    r.size_bits = model_size_bits(r.params, precision_bits);
    return r;
}

inline std::vector<LayerSpec> proposed_model_spec(int num_parents = 16, int num_children = 64) {
    return {FcLayer{num_parents, num_children}};
}

/// A three-layer FC chain whose size matches the published FC-NN
/// comparison model (17728 parameters).
inline std::vector<LayerSpec> fc_nn_reference_spec() {
    return {FcLayer{16, 72}, FcLayer{72, 120}, FcLayer{120, 64}};
}

/// Published complexity figures of the comparison networks. These are
/// literature values, rendered verbatim and never recomputed.
struct LiteratureEntry {
    const char* name;
    long params;
    const char* size_mbit;
    long flops;
};

inline constexpr LiteratureEntry kLiteratureTable[] = {
    {"fc-nn", 17728, "0.5", 17728},
    {"cnn-a", 352034, "11.2", 1370000},
    {"cnn-b", 67008, "2.1", 332000},
    {"cnn-c", 739073, "23.6", 47300000},
};

/// "%.2e" style with three significant figures and a bare exponent: 1.09e3.
inline std::string format_sci3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    std::string s(buf);
    const auto e = s.find('e');
    std::string mant = s.substr(0, e);
    int exp = std::stoi(s.substr(e + 1));
    return mant + "e" + std::to_string(exp);
}

/// Size in Mbit (1e6 bits) rounded up to `decimals` places, so the table
/// never understates storage.
inline std::string format_mbit_ceil(long bits, int decimals = 2) {
    const double scale = std::pow(10.0, decimals);
    // Integer arithmetic avoids 0.04 becoming 0.05 through representation error.
    const long unit = static_cast<long>(1e6 / scale);
    const long q = (bits + unit - 1) / unit;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, static_cast<double>(q) / scale);
    return buf;
}

struct ComplexityRow {
    std::string model;
    long params = 0;
    std::string size_mbit;
    long flops = 0;
    std::string source;  // "computed" or "literature"
};

inline ComplexityRow computed_row(const std::string& name, std::span<const LayerSpec> spec) {
    const auto r = complexity_report(spec, 32);
    return {name, r.params, format_mbit_ceil(r.size_bits, 2), r.flops, "computed"};
}

inline std::vector<ComplexityRow> literature_rows() {
    std::vector<ComplexityRow> rows;
    for (const auto& e : kLiteratureTable) rows.push_back({e.name, e.params, e.size_mbit, e.flops, "literature"});
    return rows;
}

inline std::string render_complexity_table(const std::vector<ComplexityRow>& rows) {
    std::ostringstream os;
    os << "model,params,size_mbit,flops,flops_sci,source\n";
    for (const auto& r : rows)
        os << r.model << ',' << r.params << ',' << r.size_mbit << ',' << r.flops << ','
           << format_sci3(static_cast<double>(r.flops)) << ',' << r.source << '\n';
    return os.str();
}

/// Parses a layer-spec file. Lines (after '#' comments):
///   model <name>                 starts a computed row
///   fc <n_in> <n_out>
///   conv <n_f> <f_h> <f_w> <f_d> <i_h> <i_w>
///   literature                   inserts the literature rows here
inline std::vector<ComplexityRow> parse_complexity_spec(std::istream& is) {
    std::vector<ComplexityRow> rows;
    std::string name;
    std::vector<LayerSpec> layers;
    auto flush = [&] {
        if (name.empty()) return;
        check(!layers.empty(), "complexity spec: model '" + name + "' has no layers");
        rows.push_back(computed_row(name, layers));
        name.clear();
        layers.clear();
    };
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        const std::string where = "complexity spec line " + std::to_string(lineno);
        if (kw == "model") {
            flush();
            check(static_cast<bool>(ls >> name), where + ": model needs a name");
        } else if (kw == "fc" || kw == "conv") {
            if (name.empty()) name = "model";
            if (kw == "fc") {
                FcLayer l;
                check(static_cast<bool>(ls >> l.n_in >> l.n_out), where + ": fc needs n_in n_out");
                layers.emplace_back(l);
            } else {
                ConvLayer c;
                check(static_cast<bool>(ls >> c.n_filters >> c.f_h >> c.f_w >> c.f_d >> c.i_h >> c.i_w),
                      where + ": conv needs n_f f_h f_w f_d i_h i_w");
                layers.emplace_back(c);
            }
            validate(layers.back());
        } else if (kw == "literature") {
            flush();
            for (auto& r : literature_rows()) rows.push_back(r);
        } else {
            throw Error(where + ": unknown keyword '" + kw + "'");
        }
        std::string extra;
        check(!(ls >> extra), where + ": trailing token '" + extra + "'");
    }
    flush();
    check(!rows.empty(), "complexity spec is empty");
    return rows;
}

}  // namespace beamsim
