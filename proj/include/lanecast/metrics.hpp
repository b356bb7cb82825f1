// Copyright 2026 The Lanecast Authors
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

#ifndef LANECAST__METRICS_HPP_
#define LANECAST__METRICS_HPP_

#include "lanecast/core.hpp"
#include "lanecast/data_io/samples.hpp"
#include "lanecast/model/mtpp.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace lanecast::metrics
{

inline constexpr std::size_t kReportSeconds = 6;

inline std::size_t frames_for_seconds(std::size_t seconds)
{
  return static_cast<std::size_t>(seconds * static_cast<std::size_t>(kFrameRateHz));
}

inline void check_horizon(const std::vector<Point2> & pred, const std::vector<Point2> & gt, std::size_t h)
{
  if (h == 0 || h > pred.size() || h > gt.size()) {
    throw HorizonTooLong(
      "horizon of " + std::to_string(h) + " frames exceeds prediction (" + std::to_string(pred.size()) +
      ") or ground truth (" + std::to_string(gt.size()) + ")");
  }
}

/// Mean Euclidean error over frames 1..h.
inline double ade(const std::vector<Point2> & pred, const std::vector<Point2> & gt, std::size_t h)
{
  check_horizon(pred, gt, h);
  double s = 0.0;
  for (std::size_t t = 0; t < h; ++t) {
    s += distance(pred[t], gt[t]);
  }
  return s / static_cast<double>(h);
}

/// Euclidean error at frame h.
inline double fde(const std::vector<Point2> & pred, const std::vector<Point2> & gt, std::size_t h)
{
  check_horizon(pred, gt, h);
  return distance(pred[h - 1], gt[h - 1]);
}

struct HorizonReport
{
  std::vector<double> ade;  // index s - 1 for horizon s seconds
  std::vector<double> fde;
  std::size_t agent_count{0};
};

/// Averages per-agent errors for horizons 1..seconds.
inline HorizonReport report_from_pairs(
  const std::vector<std::vector<Point2>> & preds, const std::vector<std::vector<Point2>> & gts,
  std::size_t seconds = kReportSeconds)
{
  if (preds.empty()) {
    throw EmptyDataset("no agents to evaluate");
  }
  if (preds.size() != gts.size()) {
    throw ShapeMismatch("prediction and ground-truth counts differ");
  }
  HorizonReport r;
  r.ade.assign(seconds, 0.0);
  r.fde.assign(seconds, 0.0);
  r.agent_count = preds.size();
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t s = 1; s <= seconds; ++s) {
      const std::size_t h = frames_for_seconds(s);
      r.ade[s - 1] += ade(preds[i], gts[i], h);
      r.fde[s - 1] += fde(preds[i], gts[i], h);
    }
  }
  for (std::size_t s = 0; s < seconds; ++s) {
    r.ade[s] /= static_cast<double>(preds.size());
    r.fde[s] /= static_cast<double>(preds.size());
  }
  return r;
}

/// Selected-trajectory predictions for every sample, in sample order. Work is split into
/// fixed batches, so results do not depend on the thread count.
inline std::vector<model::PredictionOutput> predict_all(
  const model::MtppModel & net, const std::vector<data_io::Sample> & samples, std::size_t threads = 1,
  std::size_t batch_size = 64, bool all_lanes = false)
{
  std::vector<model::PredictionOutput> out(samples.size());
  const std::size_t n_batches = (samples.size() + batch_size - 1) / batch_size;
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    try {
      for (std::size_t b = next++; b < n_batches; b = next++) {
        std::vector<std::size_t> idx;
        for (std::size_t i = b * batch_size; i < std::min(samples.size(), (b + 1) * batch_size); ++i) {
          idx.push_back(i);
        }
        auto preds = net.predict(model::make_batch(net.config(), samples, idx), all_lanes);
        for (std::size_t k = 0; k < idx.size(); ++k) {
          out[idx[k]] = std::move(preds[k]);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) {
        failure = std::current_exception();
      }
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, n_batches));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto & th : pool) {
      th.join();
    }
  }
  if (failure) {
    std::rethrow_exception(failure);
  }
  return out;
}

inline HorizonReport evaluate(
  const model::MtppModel & net, const std::vector<data_io::Sample> & samples, std::size_t threads = 1)
{
  if (samples.empty()) {
    throw EmptyDataset("test set is empty");
  }
  const auto preds = predict_all(net, samples, threads);
  std::vector<std::vector<Point2>> p, g;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    p.push_back(preds[i].selected_trajectory);
    g.push_back(samples[i].future);
  }
  const std::size_t seconds = std::min(kReportSeconds, net.config().horizon_frames / static_cast<std::size_t>(kFrameRateHz));
  return report_from_pairs(p, g, seconds);
}

inline std::string csv_header(std::size_t seconds = kReportSeconds)
{
  std::string h = "variant,metric";
  for (std::size_t s = 1; s <= seconds; ++s) {
    h += "," + std::to_string(s) + "s";
  }
  return h + ",agents\n";
}

/// Two rows (ADE, FDE) for one variant.
inline std::string csv_rows(const std::string & variant, const HorizonReport & r)
{
  std::string out;
  char buf[64];
  for (const auto & [name, values] : {std::pair{"ADE", &r.ade}, std::pair{"FDE", &r.fde}}) {
    out += variant + "," + name;
    for (double v : *values) {
      std::snprintf(buf, sizeof(buf), ",%.6f", v);
      out += buf;
    }
    out += "," + std::to_string(r.agent_count) + "\n";
  }
  return out;
}

inline void write_report_csv(const std::string & path, const std::vector<std::pair<std::string, HorizonReport>> & rows)
{
  std::ofstream os(path);
  if (!os) {
    throw ConfigError("cannot write report " + path);
  }
  os << csv_header(rows.empty() ? kReportSeconds : rows.front().second.ade.size());
  for (const auto & [name, r] : rows) {
    os << csv_rows(name, r);
  }
}

}  // namespace lanecast::metrics

#endif  // LANECAST__METRICS_HPP_
