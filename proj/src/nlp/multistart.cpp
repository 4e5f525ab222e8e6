#include "mfopf/nlp.hpp"

namespace mfopf {

const SolveResult& MultistartReport::best_result() const {
  if (!best) throw std::logic_error("multistart report has no optimal run");
  return runs.at(*best);
}

AllStartsFailed::AllStartsFailed(MultistartReport report)
    : std::runtime_error("no start reached an optimal solution"), report_(std::move(report)) {}

MultistartReport multistart(const NlpProblem& problem, const std::vector<Vector>& starts,
                            const SolverOptions& options) {
  if (starts.empty()) throw ConfigError("multistart needs at least one start");
  MultistartReport report;
  report.runs.reserve(starts.size());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    report.runs.push_back(solve(problem, options, starts[k]));
    const SolveResult& r = report.runs.back();
    if (!r.optimal()) continue;
    // Ties keep the earliest start so the choice does not depend on ordering noise.
    if (!report.best || r.objective < report.runs[*report.best].objective) report.best = k;
  }
  if (!report.best) throw AllStartsFailed(std::move(report));
  return report;
}

}  // namespace mfopf
