#include "crosscbr/report.hpp"

#include <iomanip>
#include <sstream>

namespace crosscbr {

Json to_json(const StepRecord& rec) {
  return Json{{"step", rec.step},
              {"bpr", rec.loss.bpr},
              {"cl_u", rec.loss.contrastive_user},
              {"cl_b", rec.loss.contrastive_bundle},
              {"l2", rec.loss.l2},
              {"total", rec.loss.total}};
}

Json to_json(const EpochRecord& rec) {
  const std::string k = std::to_string(rec.k);
  return Json{{"epoch", rec.epoch},
              {"val_recall@" + k, rec.val_recall},
              {"val_ndcg@" + k, rec.val_ndcg},
              {"mean_bpr", rec.mean_bpr},
              {"mean_total", rec.mean_total},
              {"best_epoch", rec.best_epoch}};
}

Json to_json(const MetricsReport& report) {
  Json j;
  j["target"] = to_string(report.target);
  j["view"] = to_string(report.view);
  j["evaluated_users"] = report.evaluated_users;
  const auto metrics = [](const std::map<int, double>& recall, const std::map<int, double>& ndcg) {
    Json m;
    for (const auto& [k, v] : recall) m["recall@" + std::to_string(k)] = v;
    for (const auto& [k, v] : ndcg) m["ndcg@" + std::to_string(k)] = v;
    return m;
  };
  j["metrics"] = metrics(report.recall_at, report.ndcg_at);
  Json per_view = Json::object();
  for (const auto& [view, m] : report.per_view) {
    per_view[to_string(view)] = metrics(m.recall_at, m.ndcg_at);
  }
  j["per_view"] = per_view;
  return j;
}

Json to_json(const AlignmentDispersionReport& r) {
  return Json{{"A_U^C", r.align_users},
              {"A_B^C", r.align_bundles},
              {"D_U^B", r.disperse_users_bundle_view},
              {"D_U^I", r.disperse_users_item_view},
              {"D_B^B", r.disperse_bundles_bundle_view},
              {"D_B^I", r.disperse_bundles_item_view},
              {"user_pairs", r.user_pairs},
              {"bundle_pairs", r.bundle_pairs},
              {"exact", r.exact}};
}

std::string to_table(const MetricsReport& report) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "view" << std::setw(8) << "metric" << std::right
     << std::setw(5) << "K" << std::setw(12) << "value" << '\n';
  os << std::fixed << std::setprecision(6);
  for (const auto& [view, m] : report.per_view) {
    const auto row = [&](const char* name, const std::map<int, double>& values) {
      for (const auto& [k, v] : values) {
        os << std::left << std::setw(8) << to_string(view) << std::setw(8) << name << std::right
           << std::setw(5) << k << std::setw(12) << v << '\n';
      }
    };
    row("recall", m.recall_at);
    row("ndcg", m.ndcg_at);
  }
  os << "evaluated users: " << report.evaluated_users << " (" << to_string(report.target) << ")\n";
  return os.str();
}

std::string to_table(const AlignmentDispersionReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "metric" << std::right << std::setw(12) << "value" << '\n';
  os << std::fixed << std::setprecision(6);
  const auto row = [&](const char* name, double v) {
    os << std::left << std::setw(8) << name << std::right << std::setw(12) << v << '\n';
  };
  row("A_U^C", r.align_users);
  row("A_B^C", r.align_bundles);
  row("D_U^B", r.disperse_users_bundle_view);
  row("D_U^I", r.disperse_users_item_view);
  row("D_B^B", r.disperse_bundles_bundle_view);
  row("D_B^I", r.disperse_bundles_item_view);
  os << "pairs: users " << r.user_pairs << ", bundles " << r.bundle_pairs
     << (r.exact ? " (exact)" : " (sampled)") << '\n';
  return os.str();
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "view,metric,k,value\n" << std::setprecision(17);
  for (const auto& [view, m] : report.per_view) {
    for (const auto& [k, v] : m.recall_at) os << to_string(view) << ",recall," << k << ',' << v << '\n';
    for (const auto& [k, v] : m.ndcg_at) os << to_string(view) << ",ndcg," << k << ',' << v << '\n';
  }
  return os.str();
}

}  // namespace crosscbr
