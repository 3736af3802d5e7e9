// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "dlpm/model.hpp"
#include "dlpm/schedule.hpp"

namespace dlpm {

/// A trained model together with what is needed to reuse it.
///
/// Text layout, one `key value` pair per line followed by the parameters:
///
///   dlpm-checkpoint 1
///   input_dim 2
///   hidden 64
///   blocks 4
///   time_dim 32
///   schedule_kind scale_preserving
///   horizon 100
///   alpha 1.7
///   seed 7
///   step 10000
///   params 44162
///   <one shortest round-trip decimal per line>
struct Checkpoint {
  EpsModel model;
  ScheduleSpec schedule;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
};

std::string checkpoint_to_text(const Checkpoint& ckpt);
Checkpoint checkpoint_from_text(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);
double parse_double(const std::string& text);

} // namespace dlpm
