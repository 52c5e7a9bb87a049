#include "cli.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hilmeme/error.hpp"
#include "hilmeme/service.hpp"

namespace hilmeme::cli {

namespace {

using service::json;

std::string read_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  if (!f) throw Error("io_error", "cannot write " + path);
}

service::HttpService* g_running = nullptr;

void on_signal(int) {
  if (g_running) g_running->stop();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Human-in-the-loop MT evaluation with multi-word expression judgements", "hilmeme"};
  app.require_subcommand(1);

  std::string data_dir = "hilmeme-data";
  app.add_option("--data-dir", data_dir, "Store directory")->envname("HILMEME_DATA_DIR");

  std::string campaign_id, corpus_path, format = "jsonl", outputs_path, config_path, metric,
                           file_path, out_path, level = "system", method = "pearson",
                           client_token, host = "127.0.0.1", report_format = "csv",
                           termbank_format = "tsv";
  std::optional<std::uint64_t> seed;
  std::optional<double> plain_threshold;
  int port = 8080;

  auto* create = app.add_subcommand("create-campaign", "Create a campaign from a config file");
  create->add_option("--config", config_path, "Campaign config json (assessors, practice, ...)")->required();
  create->add_option("--id", campaign_id, "Campaign id (overrides the config)");
  create->add_option("--corpus", corpus_path, "Corpus file");
  create->add_option("--format", format, "Corpus format: jsonl or tsv");
  create->add_option("--outputs", outputs_path, "System output file (json-lines)");
  create->add_option("--seed", seed, "Shuffle seed (overrides the config)");
  create->add_option("--plain-threshold", plain_threshold, "Term-bank plain-phrase cutoff");
  create->add_option("--client-token", client_token, "Idempotency token");

  auto* ingest = app.add_subcommand("ingest", "Add corpus items to a campaign");
  ingest->add_option("--campaign", campaign_id)->required();
  ingest->add_option("--corpus", corpus_path)->required();
  ingest->add_option("--format", format, "jsonl or tsv");

  auto* add_system = app.add_subcommand("add-system", "Add system outputs to a campaign");
  add_system->add_option("--campaign", campaign_id)->required();
  add_system->add_option("--outputs", outputs_path)->required();

  auto* add_metric = app.add_subcommand("add-metric-scores", "Load automatic metric scores");
  add_metric->add_option("--campaign", campaign_id)->required();
  add_metric->add_option("--metric", metric, "Metric name, e.g. bleu")->required();
  add_metric->add_option("--file", file_path, "json-lines {system_id, item_id?, score}")->required();

  auto* report = app.add_subcommand("report", "Per-system scores, tallies and aspect counts");
  report->add_option("--campaign", campaign_id)->required();
  report->add_option("--format", report_format, "csv or json");
  report->add_option("--out", out_path);

  auto* correlate = app.add_subcommand("correlate", "Correlate human scores with a metric");
  correlate->add_option("--campaign", campaign_id)->required();
  correlate->add_option("--metric", metric)->required();
  correlate->add_option("--level", level, "system or segment");
  correlate->add_option("--method", method, "pearson, spearman or kendall");

  auto* termbank = app.add_subcommand("export-termbank", "Export the bilingual MWE term bank");
  termbank->add_option("--campaign", campaign_id)->required();
  termbank->add_option("--format", termbank_format, "tsv or json");
  termbank->add_option("--plain-threshold", plain_threshold);
  termbank->add_option("--out", out_path);

  auto* export_j = app.add_subcommand("export-judgements", "Export stored judgements (json-lines)");
  export_j->add_option("--campaign", campaign_id)->required();
  export_j->add_option("--out", out_path);

  auto* import_j = app.add_subcommand("import-judgements", "Re-import an exported judgement file");
  import_j->add_option("--campaign", campaign_id)->required();
  import_j->add_option("--file", file_path)->required();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}, {"fields", json::array()}}.dump() << '\n';
    return 2;
  }

  try {
    service::Store store(data_dir);

    if (*create) {
      json request = json::parse(read_input(config_path));
      if (!campaign_id.empty()) request["campaign_id"] = campaign_id;
      if (!corpus_path.empty()) {
        request["corpus"] = read_input(corpus_path);
        request["corpus_format"] = format;
      }
      if (!outputs_path.empty()) request["outputs"] = read_input(outputs_path);
      if (seed) request["shuffle_seed"] = *seed;
      if (plain_threshold) request["plain_threshold"] = *plain_threshold;
      auto id = store.create_campaign(service::campaign_from_request(request), client_token);
      out << json{{"campaign_id", id}}.dump() << '\n';
    } else if (*ingest) {
      auto items = corpus::ingest_corpus(read_input(corpus_path), corpus::parse_format(format));
      const auto n = items.size();
      store.campaign(campaign_id).add_items(std::move(items));
      out << json{{"campaign_id", campaign_id}, {"items_added", n}}.dump() << '\n';
    } else if (*add_system) {
      auto outputs = corpus::ingest_outputs(read_input(outputs_path));
      auto& c = store.campaign(campaign_id);
      c.add_outputs(std::move(outputs));
      const auto campaign = c.campaign();
      const auto binding = corpus::bind_outputs(campaign.items, campaign.outputs);
      json gaps = json::array();
      for (const auto& g : binding.gaps) {
        gaps.push_back({{"system_id", g.system_id}, {"missing_item_ids", g.missing_item_ids}});
      }
      out << json{{"campaign_id", campaign_id}, {"work_units", binding.queue.size()}, {"coverage_gaps", gaps}}
                 .dump()
          << '\n';
    } else if (*add_metric) {
      auto scores = service::parse_metric_scores(read_input(file_path), metric);
      store.campaign(campaign_id).add_metric_scores(metric, scores);
      out << json{{"campaign_id", campaign_id}, {"metric", metric}, {"scores_added", scores.size()}}.dump()
          << '\n';
    } else if (*report) {
      auto& c = store.campaign(campaign_id);
      if (report_format == "json") {
        write_output(out_path, service::campaign_report_json(c).dump(2) + "\n", out);
      } else if (report_format == "csv") {
        write_output(out_path, service::campaign_report_csv(c), out);
      } else {
        throw ValidationError("unknown report format '" + report_format + "'", {{"format", "csv or json"}});
      }
    } else if (*correlate) {
      auto result = service::campaign_correlation(store.campaign(campaign_id), metric,
                                                  analytics::parse_level(level),
                                                  analytics::parse_method(method));
      auto body = io::to_json(result);
      body["metric"] = metric;
      out << body.dump() << '\n';
    } else if (*termbank) {
      auto& c = store.campaign(campaign_id);
      if (termbank_format == "json") {
        write_output(out_path, service::term_bank_json(c, plain_threshold).dump(2) + "\n", out);
      } else if (termbank_format == "tsv") {
        write_output(out_path, io::termbank_tsv(service::campaign_term_bank(c, plain_threshold)), out);
      } else {
        throw ValidationError("unknown term bank format '" + termbank_format + "'", {{"format", "tsv or json"}});
      }
    } else if (*export_j) {
      write_output(out_path, service::judgements_jsonl(*store.campaign(campaign_id).snapshot()), out);
    } else if (*import_j) {
      auto records = service::parse_judgements_jsonl(read_input(file_path));
      std::vector<scoring::SegmentJudgement> judgements;
      for (auto& r : records) judgements.push_back(std::move(r.judgement));
      auto written = store.campaign(campaign_id).import_judgements(std::move(judgements));
      out << json{{"campaign_id", campaign_id}, {"imported", written.size()}}.dump() << '\n';
    } else if (*serve) {
      service::HttpService http(store);
      g_running = &http;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      err << "listening on " << host << ":" << port << '\n';
      const bool ok = http.listen(host, port);
      g_running = nullptr;
      if (!ok) throw Error("io_error", "cannot listen on " + host + ":" + std::to_string(port));
    }
    return 0;
  } catch (const Error& e) {
    err << service::error_body(e).dump() << '\n';
    return 1;
  } catch (const json::exception& e) {
    err << json{{"error", "parse_error"}, {"message", e.what()}, {"fields", json::array()}}.dump() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}, {"fields", json::array()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace hilmeme::cli
