// Copyright 2026 The hypogsr Authors.
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

#include <bit>
#include <cstring>

#include <spdlog/spdlog.h>

#include "hypogsr/error.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr {

namespace {

constexpr std::string_view kMagic = "HYPOGSR-MODEL v1";

std::vector<ad::Parameter> to_params(const std::vector<ParameterBlock>& blocks) {
  std::vector<ad::Parameter> params;
  for (const auto& b : blocks) {
    ad::Matrix m(static_cast<Eigen::Index>(b.rows), static_cast<Eigen::Index>(b.cols));
    std::copy(b.values.begin(), b.values.end(), m.data());
    params.emplace_back(b.name, std::move(m));
  }
  return params;
}

const ParameterBlock& find_block(const std::vector<ParameterBlock>& blocks, std::string_view name) {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw ParseError("model file lacks parameter block '" + std::string(name) + "'");
}

std::vector<Tree> trees_from(const std::vector<ParameterBlock>& blocks) {
  std::vector<Tree> trees;
  for (const auto& b : blocks)
    if (b.name.starts_with("tree_")) trees.push_back(tree_from_block(b));
  return trees;
}

}  // namespace

std::string save_model(const TrainedModel& model, std::string_view config_digest) {
  static_assert(std::endian::native == std::endian::little);
  const auto blocks = model.parameters();
  nlohmann::json header;
  header["family"] = family_name(model.family());
  header["layout"] = layout_name(model.layout());
  header["input_cols"] = model.input_cols();
  header["seed"] = model.meta().seed;
  header["config_digest"] = config_digest;
  header["meta"] = to_json(model.meta());
  header["structure"] = model.structure();
  auto& shapes = header["blocks"] = nlohmann::json::array();
  std::size_t total = 0;
  for (const auto& b : blocks) {
    shapes.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}});
    total += b.values.size();
  }
  std::string out(kMagic);
  out += '\n';
  out += header.dump();
  out += '\n';
  const std::size_t body_at = out.size();
  out.resize(body_at + total * sizeof(double));
  char* cursor = out.data() + body_at;
  for (const auto& b : blocks) {
    std::memcpy(cursor, b.values.data(), b.values.size() * sizeof(double));
    cursor += b.values.size() * sizeof(double);
  }
  return out;
}

LoadedModel load_model(std::string_view bytes, std::string_view expected_digest) {
  const auto first = bytes.find('\n');
  if (first == std::string_view::npos || bytes.substr(0, first) != kMagic)
    throw ParseError("not a hypogsr model file");
  const auto second = bytes.find('\n', first + 1);
  if (second == std::string_view::npos) throw ParseError("model file header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(first + 1, second - first - 1));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model header: ") + e.what());
  }
  std::string_view body = bytes.substr(second + 1);

  std::vector<ParameterBlock> blocks;
  try {
    for (const auto& s : header.at("blocks")) {
      ParameterBlock b{s.at("name").get<std::string>(), s.at("rows").get<std::size_t>(),
                       s.at("cols").get<std::size_t>(), {}};
      const std::size_t n = b.rows * b.cols;
      if (body.size() < n * sizeof(double)) throw ParseError("model body is truncated");
      b.values.resize(n);
      std::memcpy(b.values.data(), body.data(), n * sizeof(double));
      body.remove_prefix(n * sizeof(double));
      blocks.push_back(std::move(b));
    }
    if (!body.empty()) throw ParseError("model body has trailing bytes");

    LoadedModel out;
    out.config_digest = header.at("config_digest").get<std::string>();
    if (!expected_digest.empty() && out.config_digest != expected_digest) {
      out.digest_matches = false;
      spdlog::warn("model was trained under config digest {} but the current digest is {}",
                   out.config_digest, expected_digest);
    }
    const Family family = parse_family(header.at("family").get<std::string>());
    const FeatureLayout layout = parse_layout(header.at("layout").get<std::string>());
    const auto input_cols = header.at("input_cols").get<std::size_t>();
    TrainingMeta meta = training_meta_from_json(header.at("meta"));
    switch (family) {
      case Family::kLogReg: {
        const auto& w = find_block(blocks, "weights");
        out.model = std::make_unique<LogRegModel>(layout, w.values,
                                                  find_block(blocks, "bias").values.at(0),
                                                  std::move(meta));
        break;
      }
      case Family::kKnn: {
        const auto& xb = find_block(blocks, "train_x");
        const auto& yb = find_block(blocks, "train_y");
        FeatureMatrix train{layout, xb.rows, xb.cols, xb.values};
        std::vector<int> labels(yb.values.begin(), yb.values.end());
        out.model = std::make_unique<KnnModel>(std::move(train), std::move(labels),
                                               header.at("structure").at("k").get<std::size_t>(),
                                               std::move(meta));
        break;
      }
      case Family::kRandomForest:
        out.model = std::make_unique<RandomForestModel>(layout, input_cols, trees_from(blocks),
                                                        std::move(meta));
        break;
      case Family::kGbdt:
        out.model = std::make_unique<GbdtModel>(layout, input_cols,
                                                find_block(blocks, "base_score").values.at(0),
                                                trees_from(blocks), std::move(meta));
        break;
      case Family::kMlp:
      case Family::kCnn:
      case Family::kLstm: {
        const NetworkSpec spec = NetworkSpec::from_json(header.at("structure"));
        out.model = std::make_unique<NeuralModel>(family, layout, Network(spec, to_params(blocks)),
                                                  std::move(meta));
        break;
      }
    }
    if (out.model->input_cols() != input_cols)
      throw ParseError("model input width disagrees with its header");
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model header: ") + e.what());
  }
}

}  // namespace hypogsr
