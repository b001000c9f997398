#include "fogsim/baselines.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace fogsim {

const char* to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::agent: return "agent";
    case SchedulerKind::round_robin: return "rr";
    case SchedulerKind::min_min: return "minmin";
    case SchedulerKind::geo_aware: return "geo";
  }
  return "unknown";
}

std::optional<SchedulerKind> parse_scheduler(std::string_view text) {
  for (auto kind : {SchedulerKind::agent, SchedulerKind::round_robin, SchedulerKind::min_min,
                    SchedulerKind::geo_aware}) {
    if (text == to_string(kind)) return kind;
  }
  return std::nullopt;
}

namespace {

bool usable(const PlanningContext& ctx, std::size_t node) {
  return ctx.excluded.empty() || !ctx.excluded[node];
}

std::vector<BatchSummary> by_device(std::span<const BatchSummary> batches) {
  std::vector<BatchSummary> sorted(batches.begin(), batches.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const BatchSummary& a, const BatchSummary& b) { return a.device < b.device; });
  return sorted;
}

struct Quote {
  Interval window;
  double et = 0.0;
};

std::optional<Quote> quote(const PlanningContext& ctx, const BatchSummary& batch, std::size_t node) {
  if (!usable(ctx, node) || !check_ram(ctx.nodes[node], batch)) return std::nullopt;
  const double et = estimate_et(batch, ctx.nodes[node]);
  const auto gap = ctx.schedules[node].find_slot(et, ctx.now);
  if (!gap) return std::nullopt;
  return Quote{*gap, et};
}

void bind(PlanningContext& ctx, AssignmentPlan& plan, DeviceId device, std::size_t node, const Quote& q) {
  ctx.schedules[node].insert(Slot{device, q.window.start, q.window.completion});
  plan.bindings.push_back(Binding{device, NodeId{node}, q.window.start, q.window.completion, q.et});
}

void check_context(const PlanningContext& ctx) {
  if (ctx.schedules.size() != ctx.nodes.size()) throw std::invalid_argument("one schedule per node required");
  if (!ctx.excluded.empty() && ctx.excluded.size() != ctx.nodes.size())
    throw std::invalid_argument("exclusion mask size mismatch");
}

}  // namespace

AssignmentPlan round_robin(std::span<const BatchSummary> batches, PlanningContext context) {
  check_context(context);
  AssignmentPlan plan;
  const std::size_t p = context.nodes.size();
  const auto sorted = by_device(batches);
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    const auto& batch = sorted[k];
    bool placed = false;
    for (std::size_t step = 0; step < p && !placed; ++step) {
      const std::size_t node = (k + step) % p;
      if (auto q = quote(context, batch, node)) {
        bind(context, plan, batch.device, node, *q);
        placed = true;
      }
    }
    if (!placed) plan.failed.push_back(batch.device);
  }
  return plan;
}

AssignmentPlan min_min(std::span<const BatchSummary> batches, PlanningContext context) {
  check_context(context);
  AssignmentPlan plan;
  const auto sorted = by_device(batches);

  struct Best {
    std::size_t node = 0;
    Quote quote;
  };
  auto best_for = [&](const BatchSummary& batch) -> std::optional<Best> {
    std::optional<Best> best;
    for (std::size_t n = 0; n < context.nodes.size(); ++n) {
      auto q = quote(context, batch, n);
      if (q && (!best || q->window.completion < best->quote.window.completion)) best = Best{n, *q};
    }
    return best;
  };

  std::vector<std::optional<Best>> cache(sorted.size());
  std::vector<bool> open(sorted.size(), true);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    cache[i] = best_for(sorted[i]);
    if (!cache[i]) {
      plan.failed.push_back(sorted[i].device);
      open[i] = false;
    }
  }

  for (;;) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (!open[i]) continue;
      if (!pick || cache[i]->quote.window.completion < cache[*pick]->quote.window.completion) pick = i;
    }
    if (!pick) break;
    const std::size_t chosen_node = cache[*pick]->node;
    bind(context, plan, sorted[*pick].device, chosen_node, cache[*pick]->quote);
    open[*pick] = false;

    // Only the committed node's schedule changed, so only devices whose best
    // quote came from it need a fresh search.
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (!open[i] || cache[i]->node != chosen_node) continue;
      cache[i] = best_for(sorted[i]);
      if (!cache[i]) {
        plan.failed.push_back(sorted[i].device);
        open[i] = false;
      }
    }
  }
  return plan;
}

AssignmentPlan geo_aware(std::span<const BatchSummary> batches, PlanningContext context, std::size_t theta) {
  check_context(context);
  if (theta == 0) throw std::invalid_argument("theta must be at least 1");
  AssignmentPlan plan;
  for (const auto& batch : by_device(batches)) {
    const auto ranking = rank_by_distance(batch.location, context.nodes, context.excluded);
    bool placed = false;
    for (std::size_t cursor = 0; cursor < ranking.size() && !placed; cursor += theta) {
      const std::size_t end = std::min(ranking.size(), cursor + theta);
      std::optional<std::size_t> winner;
      std::optional<Quote> winner_quote;
      double winner_distance = std::numeric_limits<double>::infinity();
      for (std::size_t r = cursor; r < end; ++r) {
        const std::size_t n = ranking[r].node.index();
        auto q = quote(context, batch, n);
        if (!q) continue;
        const double d = distance(batch.location, context.nodes[n].location);
        const bool better = !winner || d < winner_distance ||
                            (d == winner_distance && q->window.completion < winner_quote->window.completion);
        if (better) {
          winner = n;
          winner_quote = q;
          winner_distance = d;
        }
      }
      if (winner) {
        bind(context, plan, batch.device, *winner, *winner_quote);
        placed = true;
      }
    }
    if (!placed) plan.failed.push_back(batch.device);
  }
  return plan;
}

}  // namespace fogsim
