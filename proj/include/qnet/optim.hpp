#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <thread>
#include <vector>

#include "qnet/common.hpp"

namespace qnet {

struct NelderMeadOptions {
  int max_iters = 2000;
  double f_tolerance = 1e-10;   // spread of simplex values
  double x_tolerance = 1e-9;    // spread of simplex vertices
  double initial_step = 0.25;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Nelder-Mead downhill simplex with the adaptive coefficients of Gao & Han,
/// which behave much better than the classic constants in higher dimensions.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0, const NelderMeadOptions& opt = {}) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw argument_error("nelder_mead: empty parameter vector");

  const double alpha = 1.0;
  const double beta = 1.0 + 2.0 / n;
  const double gamma = 0.75 - 0.5 / n;
  const double delta = 1.0 - 1.0 / n;

  std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(n + 1), x0);
  std::vector<double> fs(static_cast<std::size_t>(n + 1));
  for (int i = 0; i < n; ++i) xs[static_cast<std::size_t>(i + 1)](i) += opt.initial_step;
  for (int i = 0; i <= n; ++i) fs[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);

  std::vector<int> order(static_cast<std::size_t>(n + 1));
  std::iota(order.begin(), order.end(), 0);

  NelderMeadResult res;
  int iter = 0;
  for (; iter < opt.max_iters; ++iter) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return fs[static_cast<std::size_t>(a)] < fs[static_cast<std::size_t>(b)];
    });
    const int best = order.front();
    const int worst = order.back();
    const int second_worst = order[static_cast<std::size_t>(n - 1)];

    double fspread = fs[static_cast<std::size_t>(worst)] - fs[static_cast<std::size_t>(best)];
    double xspread = 0.0;
    for (int i = 1; i <= n; ++i)
      xspread = std::max(xspread, (xs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] -
                                   xs[static_cast<std::size_t>(best)]).lpNorm<Eigen::Infinity>());
    if (fspread < opt.f_tolerance && xspread < opt.x_tolerance) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += xs[static_cast<std::size_t>(i)];
    centroid /= n;

    Eigen::VectorXd xr = centroid + alpha * (centroid - xs[static_cast<std::size_t>(worst)]);
    double fr = f(xr);

    if (fr < fs[static_cast<std::size_t>(best)]) {
      Eigen::VectorXd xe = centroid + beta * (xr - centroid);
      double fe = f(xe);
      if (fe < fr) { xs[static_cast<std::size_t>(worst)] = xe; fs[static_cast<std::size_t>(worst)] = fe; }
      else { xs[static_cast<std::size_t>(worst)] = xr; fs[static_cast<std::size_t>(worst)] = fr; }
    } else if (fr < fs[static_cast<std::size_t>(second_worst)]) {
      xs[static_cast<std::size_t>(worst)] = xr;
      fs[static_cast<std::size_t>(worst)] = fr;
    } else {
      bool outside = fr < fs[static_cast<std::size_t>(worst)];
      Eigen::VectorXd xc = outside ? (centroid + gamma * (xr - centroid)).eval()
                                   : (centroid - gamma * (centroid - xs[static_cast<std::size_t>(worst)])).eval();
      double fc = f(xc);
      if (fc < std::min(fr, fs[static_cast<std::size_t>(worst)])) {
        xs[static_cast<std::size_t>(worst)] = xc;
        fs[static_cast<std::size_t>(worst)] = fc;
      } else {
        // shrink toward the best vertex
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          xs[static_cast<std::size_t>(i)] = xs[static_cast<std::size_t>(best)] +
              delta * (xs[static_cast<std::size_t>(i)] - xs[static_cast<std::size_t>(best)]);
          fs[static_cast<std::size_t>(i)] = f(xs[static_cast<std::size_t>(i)]);
        }
      }
    }
  }

  auto it = std::min_element(fs.begin(), fs.end());
  res.value = *it;
  res.x = xs[static_cast<std::size_t>(std::distance(fs.begin(), it))];
  res.iterations = iter;
  return res;
}

/// Runs fn(i) for i in [0, count) on `threads` workers. Each index is an
/// independent task whose output must depend only on i, so the result is
/// schedule-independent; workers grab indices from an atomic counter.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (count <= 0) return;
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      while (true) {
        int i = next.fetch_add(1);
        if (i >= count || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace qnet
