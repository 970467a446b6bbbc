#include "seels/model_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace seels {

namespace {

using nlohmann::json;

std::string encode_f64(const double* data, std::size_t count) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(count * 16);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], 8);
    // little-endian byte order
    for (int b = 0; b < 8; ++b) {
      const unsigned byte = static_cast<unsigned>((bits >> (8 * b)) & 0xFF);
      out.push_back(hex[byte >> 4]);
      out.push_back(hex[byte & 0xF]);
    }
  }
  return out;
}

void decode_f64(const std::string& s, double* data, std::size_t count) {
  if (s.size() != count * 16)
    throw std::runtime_error("model_from_json: payload length mismatch");
  auto nib = [](char c) -> std::uint64_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
    throw std::runtime_error("model_from_json: bad hex digit");
  };
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const std::size_t p = i * 16 + 2 * b;
      bits |= ((nib(s[p]) << 4) | nib(s[p + 1])) << (8 * b);
    }
    std::memcpy(&data[i], &bits, 8);
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  return json{{"rows", m.rows()},
              {"cols", m.cols()},
              {"data", encode_f64(m.data(), static_cast<std::size_t>(m.size()))}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(),
                    j.at("cols").get<Eigen::Index>());
  decode_f64(j.at("data").get<std::string>(), m.data(),
             static_cast<std::size_t>(m.size()));
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  return json{{"size", v.size()},
              {"data", encode_f64(v.data(), static_cast<std::size_t>(v.size()))}};
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.at("size").get<Eigen::Index>());
  decode_f64(j.at("data").get<std::string>(), v.data(),
             static_cast<std::size_t>(v.size()));
  return v;
}

}  // namespace

std::string model_to_json(const MetaModel& model) {
  json j;
  j["format"] = "seels-meta-model";
  j["version"] = 1;
  j["input_dim"] = model.net.input_dim;
  j["feature_dim"] = model.net.feature_dim;
  json trunk = json::array();
  for (int l = 0; l < model.net.layers(); ++l)
    trunk.push_back(json{{"w", matrix_to_json(model.net.w[l])},
                         {"b", vector_to_json(model.net.b[l])}});
  j["trunk"] = trunk;
  json heads = json::array();
  for (const auto& h : model.net.head) heads.push_back(matrix_to_json(h));
  j["heads"] = heads;
  json prior = json::array();
  for (int i = 0; i < model.prior.dims(); ++i)
    prior.push_back(json{{"kappa0", vector_to_json(model.prior.kappa0[i])},
                         {"lambda0", matrix_to_json(model.prior.lambda0[i])}});
  j["prior"] = prior;
  j["sigma"] = vector_to_json(model.prior.sigma);
  return j.dump(2);
}

MetaModel model_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "seels-meta-model" || j.at("version") != 1)
    throw std::runtime_error("model_from_json: unknown format/version");
  MetaModel m;
  m.net.input_dim = j.at("input_dim").get<int>();
  m.net.feature_dim = j.at("feature_dim").get<int>();
  for (const auto& layer : j.at("trunk")) {
    m.net.w.push_back(matrix_from_json(layer.at("w")));
    m.net.b.push_back(vector_from_json(layer.at("b")));
  }
  for (const auto& h : j.at("heads")) m.net.head.push_back(matrix_from_json(h));
  for (const auto& p : j.at("prior")) {
    m.prior.kappa0.push_back(vector_from_json(p.at("kappa0")));
    m.prior.lambda0.push_back(matrix_from_json(p.at("lambda0")));
  }
  m.prior.sigma = vector_from_json(j.at("sigma"));
  return m;
}

void save_model(const MetaModel& model, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("save_model: cannot open " + path);
  f << model_to_json(model);
}

MetaModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("load_model: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return model_from_json(text);
}

}  // namespace seels
