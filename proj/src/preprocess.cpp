#include "ipgp/preprocess.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include "ipgp/errors.hpp"

namespace ipgp {

ObservationSet preprocess_real_data(const Frames& frames, const PreprocessOptions& opt) {
  if (opt.window < 1) throw InvalidInput("smoothing window must be >= 1");
  if (!(opt.dt > 0.0)) throw InvalidInput("frame spacing must be > 0");
  if (frames.size() < static_cast<std::size_t>(opt.window) + 2)
    throw InvalidInput("need at least window + 2 frames");
  const Eigen::Index n = frames.front().rows();
  const Eigen::Index d = frames.front().cols();
  if (n < 2 || d < 1) throw IngestionError("frame 0 holds fewer than two agents", 0);
  for (std::size_t f = 0; f < frames.size(); ++f)
    if (frames[f].rows() != n || frames[f].cols() != d)
      throw IngestionError("frame " + std::to_string(f) + " has a different agent count or dimension", f);

  Eigen::VectorXd lo = frames.front().colwise().minCoeff().transpose();
  Eigen::VectorXd hi = frames.front().colwise().maxCoeff().transpose();
  for (const auto& fr : frames) {
    lo = lo.cwiseMin(fr.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(fr.colwise().maxCoeff().transpose());
  }
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(d);
  if (opt.normalize)
    for (Eigen::Index c = 0; c < d; ++c) scale(c) = hi(c) > lo(c) ? 1.0 / (hi(c) - lo(c)) : 1.0;
  if (!opt.normalize) lo.setZero();

  const std::size_t smoothed_count = frames.size() - static_cast<std::size_t>(opt.window) + 1;
  std::vector<Eigen::MatrixXd> smooth(smoothed_count, Eigen::MatrixXd::Zero(n, d));
  for (std::size_t j = 0; j < smoothed_count; ++j) {
    for (int w = 0; w < opt.window; ++w) {
      const Eigen::MatrixXd& fr = frames[j + static_cast<std::size_t>(w)];
      smooth[j] += ((fr.rowwise() - lo.transpose()).array().rowwise() * scale.transpose().array()).matrix();
    }
    smooth[j] /= static_cast<double>(opt.window);
  }

  std::vector<int> keep = opt.selected;
  if (keep.empty())
    for (std::size_t j = 1; j + 1 < smoothed_count; ++j) keep.push_back(static_cast<int>(j));
  std::sort(keep.begin(), keep.end());
  for (int j : keep)
    if (j < 1 || static_cast<std::size_t>(j) + 1 >= smoothed_count)
      throw InvalidInput("selected frame " + std::to_string(j) + " lacks a neighbour for central differences");

  ObservationSet obs;
  obs.d = static_cast<int>(d);
  obs.n = static_cast<int>(n);
  obs.order = Order::Second;
  obs.interaction = opt.interaction;
  obs.m = 1;
  obs.l = static_cast<int>(keep.size());
  const double offset = 0.5 * (opt.window - 1);
  auto flatten = [](const Eigen::MatrixXd& a) {
    Eigen::MatrixXd rowmajor = a.transpose();  // agent-major: agent i, coord c at i*d + c
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(rowmajor.data(), rowmajor.size()));
  };
  for (int j : keep) {
    const auto& prev = smooth[static_cast<std::size_t>(j) - 1];
    const auto& cur = smooth[static_cast<std::size_t>(j)];
    const auto& next = smooth[static_cast<std::size_t>(j) + 1];
    Snapshot s;
    s.state.t = opt.dt * (j + offset);
    s.state.x = flatten(cur);
    s.state.v = flatten((next - prev) / (2.0 * opt.dt));
    s.target = flatten((next - 2.0 * cur + prev) / (opt.dt * opt.dt));
    obs.times.push_back(s.state.t);
    obs.snapshots.push_back(std::move(s));
  }
  obs.validate();
  return obs;
}

Frames read_frames_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IngestionError("empty frame file", 0);
  std::map<long, std::map<long, std::pair<double, double>>> rows;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != 4)
      throw IngestionError("line " + std::to_string(line_no) + ": expected frame,agent,x,y", 0);
    long frame = 0, agent = 0;
    double x = 0, y = 0;
    try {
      frame = std::stol(cells[0]);
      agent = std::stol(cells[1]);
      x = std::stod(cells[2]);
      y = std::stod(cells[3]);
    } catch (const std::exception&) {
      throw IngestionError("line " + std::to_string(line_no) + ": non-numeric field", 0);
    }
    rows[frame][agent] = {x, y};
  }
  if (rows.empty()) throw IngestionError("frame file has no rows", 0);
  const auto& agents0 = rows.begin()->second;
  Frames frames;
  std::size_t index = 0;
  for (const auto& [frame, agents] : rows) {
    if (agents.size() != agents0.size() ||
        !std::equal(agents.begin(), agents.end(), agents0.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; }))
      throw IngestionError("frame " + std::to_string(frame) + " is missing agents or has extra ones", index);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(agents.size()), 2);
    Eigen::Index i = 0;
    for (const auto& [agent, xy] : agents) {
      block(i, 0) = xy.first;
      block(i, 1) = xy.second;
      ++i;
    }
    frames.push_back(std::move(block));
    ++index;
  }
  return frames;
}

}  // namespace ipgp
