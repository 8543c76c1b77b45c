#pragma once

#include <vector>

namespace pl6 {

/// Plain sampled signal, time in ns unless stated otherwise by the producer.
struct TimeSeries {
  std::vector<double> t;
  std::vector<double> value;
};

}  // namespace pl6
