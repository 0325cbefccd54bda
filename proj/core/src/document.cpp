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

#include "mmr/document.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mmr/errors.hpp"
#include "mmr/text.hpp"

namespace mmr {

using nlohmann::ordered_json;

std::string to_string(Split split) {
    switch (split) {
        case Split::kTrain: return "train";
        case Split::kSeen: return "seen";
        case Split::kUnseen: return "unseen";
    }
    return "train";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::kTrain;
    if (s == "seen") return Split::kSeen;
    if (s == "unseen") return Split::kUnseen;
    fail(ErrorKind::kData, "unknown split '" + s + "'");
}

std::string image_key_for(const std::string& entity) {
    return "img:" + normalize_surface(entity);
}

std::optional<std::string> entity_of_image_key(const std::string& key) {
    constexpr std::string_view kPrefix = "img:";
    if (key.size() <= kPrefix.size() || key.compare(0, kPrefix.size(), kPrefix) != 0) {
        return std::nullopt;
    }
    return key.substr(kPrefix.size());
}

namespace {

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::kIo, "cannot open " + path.string());
    }
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        ordered_json j;
        try {
            j = ordered_json::parse(line);
            fn(j);
        } catch (const ordered_json::exception& e) {
            fail(ErrorKind::kData, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        fail(ErrorKind::kIo, "cannot write " + path.string());
    }
    for (const auto& l : lines) {
        out << l << '\n';
    }
    if (!out) {
        fail(ErrorKind::kIo, "write failed for " + path.string());
    }
}

}  // namespace

void write_text_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    write_lines(path, lines);
}

namespace {

ordered_json raw_json(const RawDocument& d) {
    ordered_json j;
    j["doc_id"] = d.doc_id;
    j["title"] = d.title;
    j["body"] = d.body;
    j["main_image_key"] = d.main_image_key;
    return j;
}

RawDocument raw_from(const ordered_json& j) {
    RawDocument d;
    d.doc_id = j.at("doc_id").get<std::string>();
    d.title = j.at("title").get<std::string>();
    d.body = j.at("body").get<std::string>();
    d.main_image_key = j.value("main_image_key", std::string());
    if (d.doc_id.empty() || d.title.empty()) {
        fail(ErrorKind::kData, "document record needs non-empty doc_id and title");
    }
    return d;
}

}  // namespace

std::string to_jsonl(const RawDocument& doc) {
    return raw_json(doc).dump();
}

std::string to_jsonl(const AugmentedDocument& doc) {
    ordered_json j = raw_json(doc.raw);
    j["text_tokens"] = doc.text_tokens;
    j["main_span"] = doc.main_span;
    ordered_json related = ordered_json::array();
    for (const auto& r : doc.related) {
        ordered_json rj;
        rj["entity"] = r.entity;
        rj["span"] = r.span;
        rj["image_key"] = r.image_key;
        rj["source_doc_id"] = r.source_doc_id;
        related.push_back(std::move(rj));
    }
    j["related"] = std::move(related);
    j["warnings"] = doc.warnings;
    return j.dump();
}

std::string to_jsonl(const QaSample& s) {
    ordered_json j;
    j["sample_id"] = s.sample_id;
    j["question"] = s.question;
    j["query_image_key"] = s.query_image_key;
    j["answer"] = s.answer;
    j["gt_doc_id"] = s.gt_doc_id;
    j["split"] = to_string(s.split);
    j["query_entity"] = s.query_entity;
    j["qualifying_entity"] = s.qualifying_entity;
    j["shortcut"] = s.shortcut;
    return j.dump();
}

Kb read_kb(const std::filesystem::path& path) {
    Kb kb;
    for_each_line(path, [&](const ordered_json& j) {
        RawDocument d = raw_from(j);
        const std::string id = d.doc_id;
        if (!kb.emplace(id, std::move(d)).second) {
            fail(ErrorKind::kData, "duplicate doc_id " + id);
        }
    });
    return kb;
}

void write_kb(const std::filesystem::path& path, const Kb& kb) {
    std::vector<std::string> lines;
    for (const auto& [id, d] : kb) {
        lines.push_back(to_jsonl(d));
    }
    write_lines(path, lines);
}

AugmentedKb read_augmented_kb(const std::filesystem::path& path) {
    AugmentedKb kb;
    for_each_line(path, [&](const ordered_json& j) {
        AugmentedDocument a;
        a.raw = raw_from(j);
        a.text_tokens = j.at("text_tokens").get<std::vector<std::string>>();
        a.main_span = j.value("main_span", std::vector<std::size_t>{});
        for (const auto& rj : j.at("related")) {
            RelatedEntity r;
            r.entity = rj.at("entity").get<std::string>();
            r.span = rj.at("span").get<std::vector<std::size_t>>();
            r.image_key = rj.at("image_key").get<std::string>();
            r.source_doc_id = rj.at("source_doc_id").get<std::string>();
            for (std::size_t s : r.span) {
                if (s >= a.text_tokens.size()) {
                    fail(ErrorKind::kData, "span index out of range in " + a.raw.doc_id);
                }
            }
            a.related.push_back(std::move(r));
        }
        a.warnings = j.value("warnings", std::vector<std::string>{});
        const std::string id = a.raw.doc_id;
        if (!kb.emplace(id, std::move(a)).second) {
            fail(ErrorKind::kData, "duplicate doc_id " + id);
        }
    });
    return kb;
}

void write_augmented_kb(const std::filesystem::path& path, const AugmentedKb& kb) {
    std::vector<std::string> lines;
    for (const auto& [id, d] : kb) {
        lines.push_back(to_jsonl(d));
    }
    write_lines(path, lines);
}

std::vector<QaSample> read_samples(const std::filesystem::path& path) {
    std::vector<QaSample> out;
    for_each_line(path, [&](const ordered_json& j) {
        QaSample s;
        s.sample_id = j.at("sample_id").get<std::string>();
        s.question = j.at("question").get<std::string>();
        s.query_image_key = j.at("query_image_key").get<std::string>();
        s.answer = j.at("answer").get<std::string>();
        s.gt_doc_id = j.at("gt_doc_id").get<std::string>();
        s.split = parse_split(j.value("split", std::string("train")));
        s.query_entity = j.value("query_entity", std::string());
        s.qualifying_entity = j.value("qualifying_entity", std::string());
        s.shortcut = j.value("shortcut", false);
        out.push_back(std::move(s));
    });
    return out;
}

void write_samples(const std::filesystem::path& path, const std::vector<QaSample>& samples) {
    std::vector<std::string> lines;
    lines.reserve(samples.size());
    for (const auto& s : samples) {
        lines.push_back(to_jsonl(s));
    }
    write_lines(path, lines);
}

TypeMap read_typemap(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        fail(ErrorKind::kIo, "cannot open " + path.string());
    }
    try {
        const auto j = nlohmann::json::parse(in);
        TypeMap types;
        for (auto it = j.begin(); it != j.end(); ++it) {
            types[it.key()] = it.value().get<std::string>();
        }
        return types;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::kData, path.string() + ": " + e.what());
    }
}

void write_typemap(const std::filesystem::path& path, const TypeMap& types) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : types) {
        j[k] = v;
    }
    write_lines(path, {j.dump(2)});
}

}  // namespace mmr
