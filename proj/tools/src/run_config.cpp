// Copyright 2026 The mmr Authors
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

#include "mmr/cli/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "mmr/errors.hpp"

namespace mmr::cli {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* expected) {
    fail(ErrorKind::kConfig, "invalid value '" + value + "' for " + key + " (expected " + expected + ")");
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) {
        bad_value(key, v, "a non-negative integer");
    }
    return out;
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) {
            bad_value(key, v, "a number");
        }
        return d;
    } catch (const std::logic_error&) {
        bad_value(key, v, "a number");
    }
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "true or false");
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

template <class T>
Setter size_field(T RunConfig::*section, std::size_t T::*field) {
    return [=](RunConfig& c, const std::string& k, const std::string& v) {
        (c.*section).*field = static_cast<std::size_t>(to_u64(k, v));
    };
}

template <class T>
Setter double_field(T RunConfig::*section, double T::*field) {
    return [=](RunConfig& c, const std::string& k, const std::string& v) { (c.*section).*field = to_double(k, v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        t["run.seed"] = [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); };
        t["run.threads"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.threads = static_cast<unsigned>(to_u64(k, v));
        };

        t["encoder.dim"] = size_field(&RunConfig::encoder, &EncoderConfig::dim);
        t["encoder.text_dim"] = size_field(&RunConfig::encoder, &EncoderConfig::text_dim);
        t["encoder.image_dim"] = size_field(&RunConfig::encoder, &EncoderConfig::image_dim);
        t["encoder.num_patches"] = size_field(&RunConfig::encoder, &EncoderConfig::num_patches);
        t["encoder.heads"] = size_field(&RunConfig::encoder, &EncoderConfig::heads);
        t["encoder.attn_dim"] = size_field(&RunConfig::encoder, &EncoderConfig::attn_dim);
        t["encoder.ffn_dim"] = size_field(&RunConfig::encoder, &EncoderConfig::ffn_dim);
        t["encoder.mm_tokens"] = size_field(&RunConfig::encoder, &EncoderConfig::mm_tokens);
        t["encoder.preset"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "full") {
                c.encoder = EncoderConfig::full_scale();
            } else if (v == "small") {
                c.encoder = EncoderConfig{};
            } else {
                bad_value(k, v, "small or full");
            }
        };

        t["index.k_centroids"] = size_field(&RunConfig::index, &IndexConfig::k_centroids);
        t["index.kmeans_iters"] = size_field(&RunConfig::index, &IndexConfig::kmeans_iters);
        t["index.nbits"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.index.nbits = static_cast<unsigned>(to_u64(k, v));
        };
        t["index.lossless"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.index.lossless = to_bool(k, v);
        };
        t["index.nprobe"] = size_field(&RunConfig::search, &SearchParams::nprobe);
        t["index.candidate_doc_cap"] = size_field(&RunConfig::search, &SearchParams::candidate_doc_cap);
        t["index.k"] = size_field(&RunConfig::search, &SearchParams::k);

        t["train.batch_size"] = size_field(&RunConfig::train, &TrainConfig::batch_size);
        t["train.learning_rate"] = double_field(&RunConfig::train, &TrainConfig::learning_rate);
        t["train.epochs"] = size_field(&RunConfig::train, &TrainConfig::epochs);
        t["train.flags"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.train.flags = DocFlags::parse(v);
        };
        t["train.query_mode"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.train.query_mode = parse_query_mode(v);
        };
        t["train.optimizer"] = [](RunConfig& c, const std::string&, const std::string& v) {
            c.train.optimizer = parse_optimizer(v);
        };
        t["train.adam_beta1"] = double_field(&RunConfig::train, &TrainConfig::adam_beta1);
        t["train.adam_beta2"] = double_field(&RunConfig::train, &TrainConfig::adam_beta2);
        t["train.adam_eps"] = double_field(&RunConfig::train, &TrainConfig::adam_eps);

        t["synth.n_docs"] = size_field(&RunConfig::synth, &SynthConfig::n_docs);
        t["synth.mean_links"] = double_field(&RunConfig::synth, &SynthConfig::mean_links);
        t["synth.fraction_shortcut"] = double_field(&RunConfig::synth, &SynthConfig::fraction_shortcut);
        t["synth.n_types"] = size_field(&RunConfig::synth, &SynthConfig::n_types);
        t["synth.n_relations"] = size_field(&RunConfig::synth, &SynthConfig::n_relations);
        t["synth.hub_exponent"] = double_field(&RunConfig::synth, &SynthConfig::hub_exponent);
        t["synth.unseen_fraction"] = double_field(&RunConfig::synth, &SynthConfig::unseen_fraction);
        t["synth.n_train"] = size_field(&RunConfig::synth, &SynthConfig::n_train);
        t["synth.n_test_seen"] = size_field(&RunConfig::synth, &SynthConfig::n_test_seen);
        t["synth.n_test_unseen"] = size_field(&RunConfig::synth, &SynthConfig::n_test_unseen);
        t["synth.datagen_rounds"] = size_field(&RunConfig::synth, &SynthConfig::datagen_rounds);
        t["synth.paraphrase"] = [](RunConfig& c, const std::string& k, const std::string& v) {
            c.synth.paraphrase = to_bool(k, v);
        };

        for (const char* name : {"kb", "augmented", "typemap", "samples", "train_samples", "test_samples", "params",
                                 "index", "embeddings", "report", "rejected", "out_dir"}) {
            const std::string n = name;
            t["paths." + n] = [n](RunConfig& c, const std::string&, const std::string& v) {
                c.paths[n] = std::filesystem::path(v);
            };
        }
        return t;
    }();
    return table;
}

}  // namespace

void RunConfig::resolve() {
    train.seed = seed;
    synth.seed = seed;
    index.seed = seed;
    train.threads = threads;
    index.threads = threads;
}

void RunConfig::validate() const {
    encoder.validate();
    search.validate();
    train.validate();
    synth.validate();
    if (!index.lossless && (index.nbits < 1 || index.nbits > 8)) {
        fail(ErrorKind::kConfig, "index.nbits must be in [1, 8]");
    }
}

std::vector<std::string> known_keys() {
    std::vector<std::string> out;
    for (const auto& [k, s] : setters()) {
        out.push_back(k);
    }
    return out;
}

void set_value(RunConfig& config, const std::string& section, const std::string& key, const std::string& value) {
    const std::string full = section + "." + key;
    const auto it = setters().find(full);
    if (it == setters().end()) {
        fail(ErrorKind::kConfig, "unknown config key '" + full + "'");
    }
    it->second(config, full, value);
}

void apply_override(RunConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        fail(ErrorKind::kConfig, "override '" + assignment + "' is not of the form section.key=value");
    }
    set_value(config, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::kConfig, origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    RunConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            fail(ErrorKind::kConfig, origin + ": key '" + section + "' is outside any section");
        }
        for (const auto& [key, value] : body) {
            set_value(config, section, key, value.data());
        }
    }
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::kConfig, "cannot open config file " + path.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_run_config(text.str(), path.string());
}

std::filesystem::path path_or(const RunConfig& config, const std::string& name, const std::filesystem::path& fallback) {
    const auto it = config.paths.find(name);
    return it == config.paths.end() ? fallback : it->second;
}

void require_inputs(const std::vector<std::filesystem::path>& inputs) {
    for (const auto& p : inputs) {
        if (p.empty()) {
            fail(ErrorKind::kConfig, "a required input path is not set");
        }
        if (!std::filesystem::exists(p)) {
            fail(ErrorKind::kConfig, "input " + p.string() + " does not exist");
        }
    }
}

void require_outputs(const std::vector<std::filesystem::path>& outputs) {
    for (const auto& p : outputs) {
        if (p.empty()) {
            fail(ErrorKind::kConfig, "a required output path is not set");
        }
        const auto parent = std::filesystem::absolute(p).parent_path();
        if (!std::filesystem::is_directory(parent)) {
            fail(ErrorKind::kConfig, "output directory " + parent.string() + " does not exist");
        }
    }
}

}  // namespace mmr::cli
