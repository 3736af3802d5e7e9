// SPDX-License-Identifier: Apache-2.0
#include "dlpm/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dlpm/error.hpp"

namespace dlpm {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return {buf, res.ptr};
}

double parse_double(const std::string& text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw FormatError("not a decimal number: '" + text + "'");
  return value;
}

std::string checkpoint_to_text(const Checkpoint& ckpt) {
  const ModelDims& d = ckpt.model.dims();
  std::ostringstream out;
  out << "dlpm-checkpoint 1\n"
      << "input_dim " << d.input_dim << "\n"
      << "hidden " << d.hidden << "\n"
      << "blocks " << d.blocks << "\n"
      << "time_dim " << d.time_dim << "\n"
      << "schedule_kind " << to_string(ckpt.schedule.kind) << "\n"
      << "horizon " << ckpt.schedule.horizon << "\n"
      << "alpha " << format_double(ckpt.schedule.alpha) << "\n"
      << "seed " << ckpt.seed << "\n"
      << "step " << ckpt.step << "\n"
      << "params " << ckpt.model.params().size() << "\n";
  for (Eigen::Index i = 0; i < ckpt.model.params().size(); ++i)
    out << format_double(ckpt.model.params()(i)) << "\n";
  return out.str();
}

namespace {

std::string expect_key(std::istream& in, const std::string& key) {
  std::string k, v;
  if (!(in >> k >> v) || k != key) throw FormatError("checkpoint: expected field '" + key + "'");
  return v;
}

} // namespace

Checkpoint checkpoint_from_text(const std::string& text) {
  std::istringstream in(text);
  if (expect_key(in, "dlpm-checkpoint") != "1") throw FormatError("checkpoint: unsupported version");
  try {
    ModelDims dims;
    dims.input_dim = std::stoi(expect_key(in, "input_dim"));
    dims.hidden = std::stoi(expect_key(in, "hidden"));
    dims.blocks = std::stoi(expect_key(in, "blocks"));
    dims.time_dim = std::stoi(expect_key(in, "time_dim"));
    Checkpoint ckpt;
    ckpt.schedule.kind = schedule_kind_from_string(expect_key(in, "schedule_kind"));
    ckpt.schedule.horizon = std::stoi(expect_key(in, "horizon"));
    ckpt.schedule.alpha = parse_double(expect_key(in, "alpha"));
    ckpt.seed = std::stoull(expect_key(in, "seed"));
    ckpt.step = std::stoll(expect_key(in, "step"));
    const auto count = std::stoull(expect_key(in, "params"));
    ckpt.model = EpsModel(dims);
    if (count != static_cast<unsigned long long>(ckpt.model.params().size()))
      throw FormatError("checkpoint: parameter count does not match the architecture");
    std::string token;
    for (Eigen::Index i = 0; i < ckpt.model.params().size(); ++i) {
      if (!(in >> token)) throw FormatError("checkpoint: truncated parameter list");
      ckpt.model.params()(i) = parse_double(token);
    }
    if (in >> token) throw FormatError("checkpoint: trailing data after parameters");
    return ckpt;
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint " + path.string());
  out << checkpoint_to_text(ckpt);
  if (!out) throw FormatError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_text(buf.str());
}

} // namespace dlpm
