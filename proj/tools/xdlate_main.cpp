#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "xdlate/chem_data.hpp"
#include "xdlate/extraction.hpp"
#include "xdlate/gap_miner.hpp"
#include "xdlate/hardware_graph.hpp"
#include "xdlate/labbook.hpp"
#include "xdlate/llm.hpp"
#include "xdlate/sanitizer.hpp"
#include "xdlate/simulator.hpp"
#include "xdlate/translation.hpp"
#include "xdlate/util.hpp"
#include "xdlate/vector_store.hpp"
#include "xdlate/xdl.hpp"

namespace fs = std::filesystem;
using namespace xdlate;

namespace {

// exit-code contract: 0 clean, 1 domain findings, 2 infrastructure error
constexpr int kOk = 0;
constexpr int kFindings = 1;
constexpr int kInfra = 2;

struct Options {
  std::string store_dir = "store";
  std::string graph_path;
  std::string transcript_path;
  std::string record_path;
  bool live = false;
  bool fingerprint_replay = false;
  std::int64_t epoch = -1;
  std::uint64_t seed = 42;
  std::size_t embed_dim = 2048;
  int jobs = 1;
  int max_iterations = 6;
  int rag_k = 5;
  std::vector<std::string> ablate;
  bool abort_on_first = false;
  bool json_output = false;
  bool ask = false;
  std::string chat_model;
  std::string scrape_model;

  bool ablated(const std::string& toggle) const {
    for (const auto& a : ablate) {
      if (a == toggle) return true;
    }
    return false;
  }

  std::int64_t timestamp() const {
    if (epoch >= 0) return epoch;
    return std::chrono::duration_cast<std::chrono::seconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  std::shared_ptr<llm::Gateway> make_gateway() const {
    std::shared_ptr<llm::Gateway> gateway;
    if (!transcript_path.empty()) {
      gateway = std::make_shared<llm::ScriptedGateway>(
          llm::Transcript::load(transcript_path),
          fingerprint_replay ? llm::ReplayMode::Fingerprint
                             : llm::ReplayMode::StrictOrder,
          seed, embed_dim);
    } else if (live) {
      llm::LiveConfig config = llm::LiveConfig::from_env();
      config.dimension = embed_dim;
      if (!chat_model.empty()) config.chat_model = chat_model;
      gateway = std::make_shared<llm::LiveGateway>(std::move(config));
    } else {
      // offline default: embeddings work, chat calls are transcript misses
      gateway = std::make_shared<llm::ScriptedGateway>(llm::Transcript{},
                                                       llm::ReplayMode::StrictOrder,
                                                       seed, embed_dim);
    }
    if (!record_path.empty()) {
      gateway = std::make_shared<llm::RecordingGateway>(gateway, record_path);
    }
    return gateway;
  }

  hw::HardwareGraph load_graph_or_throw() const {
    if (graph_path.empty()) {
      throw std::runtime_error("this command needs --graph <file.json>");
    }
    auto loaded = hw::load_graph_file(graph_path);
    if (!loaded.issues.empty()) {
      std::string message = "hardware graph " + graph_path + " has schema problems:";
      for (const auto& issue : loaded.issues) {
        message += "\n  " + issue.path + ": " + issue.message;
      }
      throw std::runtime_error(message);
    }
    return std::move(*loaded.graph);
  }

  translation::PipelineOptions pipeline_options() const {
    translation::PipelineOptions p;
    p.max_iterations = max_iterations;
    p.rag_k = rag_k;
    p.use_xdl_db = !ablated("xdl_db");
    p.abort_on_first = abort_on_first;
    p.model = chat_model;
    return p;
  }

  sanitizer::SanitizeContext sanitize_context(mem::VectorStore* store,
                                              llm::Gateway* gateway,
                                              chem::ChemicalClient* chemicals,
                                              const chem::SolventTable* solvents) const {
    sanitizer::SanitizeContext ctx;
    ctx.store = store;
    ctx.gateway = gateway;
    ctx.chemicals = chemicals;
    ctx.solvents = solvents;
    ctx.use_cad = !ablated("cad");
    ctx.use_chem_data = !ablated("chem_data");
    ctx.use_doc_db = !ablated("doc_db");
    ctx.model = chat_model;
    if (ask) {
      ctx.ask = [](const std::string& question) -> std::optional<std::string> {
        std::cout << "ambiguity: " << question << "\nanswer (empty to skip)> "
                  << std::flush;
        std::string answer;
        if (!std::getline(std::cin, answer)) return std::nullopt;
        answer = util::trim(answer);
        if (answer.empty()) return std::nullopt;
        return answer;
      };
    }
    return ctx;
  }
};

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------

int cmd_graph_lint(const Options& opt, const std::string& path) {
  auto loaded = hw::load_graph_file(path);
  if (opt.json_output) {
    nlohmann::json j;
    j["issues"] = nlohmann::json::array();
    for (const auto& issue : loaded.issues) {
      j["issues"].push_back({{"path", issue.path}, {"message", issue.message}});
    }
    j["node_count"] = loaded.graph ? loaded.graph->nodes().size() : 0;
    std::cout << j.dump(2) << "\n";
  } else {
    for (const auto& issue : loaded.issues) {
      std::cout << (issue.path.empty() ? "(top level)" : issue.path) << ": "
                << issue.message << "\n";
    }
    if (loaded.issues.empty()) {
      std::cout << "graph ok: " << loaded.graph->nodes().size() << " nodes, "
                << loaded.graph->edges().size() << " edges\n";
    }
  }
  return loaded.issues.empty() ? kOk : kFindings;
}

int cmd_validate(const Options& opt, const std::string& xdl_path, bool run_sim) {
  const std::string source = util::read_file(xdl_path);
  const xdl::ParseResult stage1 = xdl::check_xdl(source);

  nlohmann::json out;
  out["stage1"] = nlohmann::json::array();
  for (const auto& e : stage1.errors) {
    out["stage1"].push_back({{"code", std::string(xdl::to_string(e.code))},
                             {"message", e.message},
                             {"line", e.location.line},
                             {"column", e.location.column}});
  }
  out["binding_errors"] = nlohmann::json::array();

  bool findings = !stage1.errors.empty() || !stage1.document;
  if (stage1.document && stage1.errors.empty() && !opt.graph_path.empty()) {
    const hw::HardwareGraph graph = opt.load_graph_or_throw();
    auto [binding, bind_errors] = hw::bind_hardware(*stage1.document, graph);
    for (const auto& e : bind_errors) out["binding_errors"].push_back(e.message);
    if (!bind_errors.empty()) findings = true;
    if (bind_errors.empty() && run_sim) {
      sim::SimOptions sim_options;
      sim_options.abort_on_first = opt.abort_on_first;
      const sim::SimulationReport report =
          sim::simulate(*stage1.document, graph, binding, sim_options);
      out["simulation"] = report.to_json();
      if (!report.pass) findings = true;
    }
  }
  out["verdict"] = findings ? "findings" : "clean";

  if (opt.json_output) {
    std::cout << out.dump(2) << "\n";
  } else {
    for (const auto& e : stage1.errors) {
      std::cout << "[" << std::string(xdl::to_string(e.code)) << "]";
      if (e.location.line > 0) std::cout << " line " << e.location.line;
      std::cout << ": " << e.message << "\n";
    }
    for (const auto& e : out["binding_errors"]) {
      std::cout << "[Binding] " << e.get<std::string>() << "\n";
    }
    if (out.contains("simulation")) {
      for (const auto& e : out["simulation"]["errors"]) {
        std::cout << "[" << e["kind"].get<std::string>() << "] step "
                  << e["step_index"].get<int>() + 1 << ": "
                  << e["message"].get<std::string>() << "\n";
      }
    }
    std::cout << (findings ? "findings" : "clean") << "\n";
  }
  return findings ? kFindings : kOk;
}

int cmd_simulate(const Options& opt, const std::string& xdl_path) {
  const std::string source = util::read_file(xdl_path);
  const xdl::ParseResult stage1 = xdl::check_xdl(source);
  if (!stage1.document || !stage1.errors.empty()) {
    std::cerr << "cannot simulate: XDL has " << stage1.errors.size()
              << " validation finding(s); run `validate` first\n";
    return kFindings;
  }
  const hw::HardwareGraph graph = opt.load_graph_or_throw();
  auto [binding, bind_errors] = hw::bind_hardware(*stage1.document, graph);
  if (!bind_errors.empty()) {
    for (const auto& e : bind_errors) std::cerr << e.message << "\n";
    return kFindings;
  }
  sim::SimOptions sim_options;
  sim_options.abort_on_first = opt.abort_on_first;
  const sim::SimulationReport report =
      sim::simulate(*stage1.document, graph, binding, sim_options);
  std::cout << report.to_json().dump(2) << "\n";
  return report.pass ? kOk : kFindings;
}

int cmd_extract(const Options& opt, const std::string& doc_path,
                const std::string& out_path) {
  const std::string text = util::read_file(doc_path);
  auto gateway = opt.make_gateway();
  mem::VectorStore store(opt.store_dir);

  extraction::ScrapeOptions scrape_options;
  scrape_options.model = opt.scrape_model.empty() ? opt.chat_model : opt.scrape_model;
  scrape_options.index_document = !opt.ablated("doc_db");
  extraction::ScrapeResult result = extraction::scrape_document(
      stem_of(doc_path), text, *gateway, &store, scrape_options);

  util::write_file(out_path, result.graph.to_json().dump(2) + "\n");
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (result.aborted) {
    std::cerr << "extraction aborted: " << result.abort_reason
              << " (partial knowledge graph written to " << out_path << ")\n";
    return kInfra;
  }
  std::cout << "knowledge graph written to " << out_path << " ("
            << result.graph.nodes().size() << " nodes, " << result.graph.edges().size()
            << " edges)\n";
  return kOk;
}

int cmd_sanitize(const Options& opt, const std::string& path, std::string title) {
  const std::string text = util::read_file(path);
  if (title.empty()) title = stem_of(path);
  auto gateway = opt.make_gateway();
  mem::VectorStore store(opt.store_dir);
  chem::ChemicalClient chemicals;
  chem::SolventTable solvents;
  auto ctx = opt.sanitize_context(&store, gateway.get(), &chemicals, &solvents);
  const sanitizer::SanitizedProcedure result = sanitizer::sanitize(title, text, ctx);
  std::cout << result.to_json().dump(2) << "\n";
  return kOk;
}

// Shared by `translate` and `pipeline`: sanitize one procedure and run the
// three-stage loop, appending to the labbook.
translation::TranslationSession process_procedure(
    const Options& opt, const std::string& title, const std::string& text,
    const hw::HardwareGraph& graph, mem::VectorStore& store, mem::Labbook& labbook,
    llm::Gateway& gateway, chem::ChemicalClient& chemicals,
    const chem::SolventTable& solvents, const std::string& document_ref,
    sanitizer::SanitizedProcedure* sanitized_out) {
  auto ctx = opt.sanitize_context(&store, &gateway, &chemicals, &solvents);
  const sanitizer::SanitizedProcedure sanitized = sanitizer::sanitize(title, text, ctx);
  if (sanitized_out != nullptr) *sanitized_out = sanitized;

  translation::PipelineSinks sinks;
  sinks.store = &store;
  sinks.labbook = &labbook;
  sinks.document_ref = document_ref;
  sinks.timestamp = opt.timestamp();

  if (sanitized.category == sanitizer::Category::Incomplete) {
    // not translatable; still record the outcome
    translation::TranslationSession session;
    session.procedure_title = title;
    session.id = "session-" + util::fnv1a_hex(title + "\x1f" + sanitized.sanitized_text);
    session.verdict = translation::Verdict::Failed;
    session.failure_note = "procedure categorized as incomplete";
    mem::LabbookEntry entry;
    entry.document_ref = document_ref;
    entry.procedure_title = title;
    entry.kg_node = "proc-" + util::slug(title);
    entry.raw_procedure = sanitized.original_text;
    entry.sanitized_procedure = sanitized.sanitized_text;
    entry.category = std::string(sanitizer::to_string(sanitized.category));
    entry.validation = session.to_json();
    entry.created_at = sinks.timestamp;
    labbook.append(std::move(entry));
    return session;
  }
  return translation::run_pipeline(sanitized, graph, gateway, opt.pipeline_options(),
                                   sinks);
}

void write_session_file(const Options& opt, const translation::TranslationSession& s) {
  const std::string dir = opt.store_dir + "/sessions";
  fs::create_directories(dir);
  util::write_file(dir + "/" + s.id + ".json", s.to_json().dump(2) + "\n");
}

int cmd_translate(const Options& opt, const std::string& path, std::string title) {
  const std::string text = util::read_file(path);
  if (title.empty()) title = stem_of(path);
  const hw::HardwareGraph graph = opt.load_graph_or_throw();
  auto gateway = opt.make_gateway();
  mem::VectorStore store(opt.store_dir);
  mem::Labbook labbook(opt.store_dir);
  chem::ChemicalClient chemicals;
  chem::SolventTable solvents;

  const auto session =
      process_procedure(opt, title, text, graph, store, labbook, *gateway, chemicals,
                        solvents, path, nullptr);
  write_session_file(opt, session);
  if (opt.json_output) {
    std::cout << session.to_json().dump(2) << "\n";
  } else if (!session.final_xdl.empty()) {
    std::cout << session.final_xdl << "\n";
  } else {
    std::cout << "translation did not converge (verdict "
              << std::string(translation::to_string(session.verdict)) << ")\n";
  }
  return kOk;
}

int cmd_pipeline(const Options& opt, const std::string& doc_path, bool as_procedure,
                 const std::string& kg_out) {
  const std::string text = util::read_file(doc_path);
  const hw::HardwareGraph graph = opt.load_graph_or_throw();
  auto gateway = opt.make_gateway();
  mem::VectorStore store(opt.store_dir);
  mem::Labbook labbook(opt.store_dir);
  chem::ChemicalClient chemicals;
  chem::SolventTable solvents;

  std::vector<std::pair<std::string, std::string>> procedures;  // title, text
  if (as_procedure) {
    procedures.emplace_back(stem_of(doc_path), text);
  } else {
    extraction::ScrapeOptions scrape_options;
    scrape_options.model = opt.scrape_model.empty() ? opt.chat_model : opt.scrape_model;
    scrape_options.index_document = !opt.ablated("doc_db");
    extraction::ScrapeResult scraped = extraction::scrape_document(
        stem_of(doc_path), text, *gateway, &store, scrape_options);
    for (const auto& w : scraped.warnings) std::cerr << "warning: " << w << "\n";
    if (scraped.aborted) {
      util::write_file(kg_out, scraped.graph.to_json().dump(2) + "\n");
      std::cerr << "extraction aborted: " << scraped.abort_reason << "\n";
      return kInfra;
    }
    for (const kg::KgNode* proc : scraped.graph.nodes_of_type(kg::NodeType::Procedure)) {
      procedures.emplace_back(proc->props.value("title", proc->id),
                              proc->props.value("text", ""));
    }
    util::write_file(kg_out, scraped.graph.to_json().dump(2) + "\n");
  }

  struct Row {
    std::string title;
    std::string category;
    std::string verdict;
    int iterations;
    std::string session_id;
  };
  std::vector<Row> rows(procedures.size());

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= procedures.size()) return;
      sanitizer::SanitizedProcedure sanitized;
      const auto session = process_procedure(opt, procedures[i].first,
                                             procedures[i].second, graph, store,
                                             labbook, *gateway, chemicals, solvents,
                                             stem_of(doc_path), &sanitized);
      write_session_file(opt, session);
      std::lock_guard lock(io_mutex);
      rows[i] = {procedures[i].first, std::string(sanitizer::to_string(sanitized.category)),
                 std::string(translation::to_string(session.verdict)),
                 session.iterations_used, session.id};
    }
  };
  if (opt.jobs <= 1 || procedures.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(opt.jobs, static_cast<int>(procedures.size()));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // link sessions into the knowledge graph
  if (!as_procedure && fs::exists(kg_out)) {
    auto graph_json = nlohmann::json::parse(util::read_file(kg_out));
    kg::KnowledgeGraph kgraph = kg::KnowledgeGraph::from_json(graph_json);
    for (const auto& row : rows) {
      const std::string proc_node = "proc-" + util::slug(row.title);
      if (kgraph.node(proc_node) != nullptr) {
        kgraph.add_edge(kg::EdgeType::TranslatedAs, proc_node, row.session_id);
      }
    }
    util::write_file(kg_out, kgraph.to_json().dump(2) + "\n");
  }

  if (opt.json_output) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& row : rows) {
      j.push_back({{"title", row.title},
                   {"category", row.category},
                   {"verdict", row.verdict},
                   {"iterations", row.iterations},
                   {"session", row.session_id}});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::printf("%-40s %-12s %-20s %s\n", "procedure", "category", "verdict",
                "iterations");
    for (const auto& row : rows) {
      std::printf("%-40s %-12s %-20s %d\n", row.title.c_str(), row.category.c_str(),
                  row.verdict.c_str(), row.iterations);
    }
  }
  return kOk;  // failed sessions are an expected outcome, not an error
}

// ---------------------------------------------------------------------------

int cmd_memory_seed(const Options& opt, const std::string& pairs_path,
                    const std::string& cad_path) {
  auto gateway = opt.make_gateway();
  mem::VectorStore store(opt.store_dir);
  int rc = kOk;

  if (!pairs_path.empty()) {
    const nlohmann::json j = nlohmann::json::parse(util::read_file(pairs_path));
    std::vector<mem::XdlPair> pairs;
    for (const auto& item : j) {
      mem::XdlPair pair;
      pair.procedure_text = item.value("procedure", "");
      pair.xdl_text = item.value("xdl", "");
      pair.provenance = "seed";
      pairs.push_back(std::move(pair));
    }
    const mem::SeedOutcome outcome = mem::seed_xdl_db(store, *gateway, pairs);
    std::cout << "xdl_pairs: inserted " << outcome.inserted << " of " << pairs.size()
              << "\n";
    for (const auto& e : outcome.errors) std::cerr << "  " << e << "\n";
    if (!outcome.errors.empty()) rc = kFindings;
  }

  if (!cad_path.empty()) {
    std::size_t inserted = 0;
    for (const std::string& line : util::split(util::read_file(cad_path), '\n')) {
      if (util::trim(line).empty()) continue;
      const nlohmann::json j = nlohmann::json::parse(line);
      sanitizer::store_ambiguity(store, *gateway, j.at("fragment").get<std::string>(),
                                 j.at("explanation").get<std::string>(),
                                 j.value("source", "annotated_seed"));
      ++inserted;
    }
    std::cout << "ambiguities: inserted " << inserted << "\n";
  }
  return rc;
}

int cmd_memory_list(const Options& opt, const std::string& ns_name) {
  const auto ns = mem::namespace_from_string(ns_name);
  if (!ns) throw std::runtime_error("unknown namespace: " + ns_name);
  mem::VectorStore store(opt.store_dir);
  for (const mem::VectorRecord* rec : store.all(*ns)) {
    nlohmann::json j{{"id", rec->id}, {"text", rec->text}, {"metadata", rec->metadata}};
    std::cout << j.dump() << "\n";
  }
  return kOk;
}

int cmd_memory_query(const Options& opt, const std::string& ns_name,
                     const std::string& text, std::size_t k) {
  const auto ns = mem::namespace_from_string(ns_name);
  if (!ns) throw std::runtime_error("unknown namespace: " + ns_name);
  mem::VectorStore store(opt.store_dir);
  const std::size_t dim = store.dimension(*ns).value_or(opt.embed_dim);
  const auto probe = llm::hash_embedding(text, opt.seed, dim);
  for (const auto& hit : store.query(probe, k, *ns)) {
    nlohmann::json j{{"id", hit.record->id},
                     {"similarity", hit.similarity},
                     {"text", hit.record->text}};
    std::cout << j.dump() << "\n";
  }
  return kOk;
}

int cmd_gaps_report(const Options& opt, const std::string& out_path,
                    double threshold) {
  mem::VectorStore store(opt.store_dir);
  const auto steps = gaps::load_flagged(store);
  if (steps.empty()) {
    std::cout << "no flagged steps recorded; nothing to report\n";
    return kOk;
  }
  // clustering always runs offline over hash embeddings; categorization uses
  // the gateway only when a transcript provides responses
  llm::ScriptedGateway embedder(llm::Transcript{}, llm::ReplayMode::StrictOrder,
                                opt.seed, opt.embed_dim);
  const auto clusters = gaps::cluster_flagged(steps, embedder, threshold);

  std::shared_ptr<llm::Gateway> categorizer;
  if (!opt.transcript_path.empty() || opt.live) categorizer = opt.make_gateway();

  std::vector<std::string> warnings;
  const auto suggestions = gaps::categorize_clusters(steps, clusters, categorizer.get(),
                                                     opt.chat_model, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  util::write_file(out_path, gaps::roadmap_report(suggestions));
  std::cout << "wrote " << out_path << " (" << steps.size() << " flagged steps, "
            << clusters.size() << " clusters)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turns chemical synthesis literature into validated, "
               "hardware-executable XDL programs"};
  app.set_config("--config", "", "TOML config file; flags override it");

  Options opt;
  app.add_option("--store", opt.store_dir, "store directory (vector DB + labbook)");
  app.add_option("--graph", opt.graph_path, "hardware graph JSON");
  app.add_option("--transcript", opt.transcript_path, "replay transcript (JSONL)");
  app.add_option("--record", opt.record_path, "record exchanges to this transcript");
  app.add_flag("--live", opt.live, "use the live LLM endpoint (env LLM_BASE_URL)");
  app.add_flag("--fingerprint-replay", opt.fingerprint_replay,
               "match transcript entries by fingerprint instead of order");
  app.add_option("--epoch", opt.epoch, "freeze timestamps to this unix time");
  app.add_option("--seed", opt.seed, "seed for scripted embeddings");
  app.add_option("--embed-dim", opt.embed_dim, "embedding dimension");
  app.add_option("--jobs", opt.jobs, "parallel procedure sessions");
  app.add_option("--max-iterations", opt.max_iterations, "translate/repair budget");
  app.add_option("--rag-k", opt.rag_k, "retrieved examples per translation");
  app.add_option("--ablate", opt.ablate,
                 "disable a data source: xdl_db, cad, chem_data, doc_db")
      ->check(CLI::IsMember({"xdl_db", "cad", "chem_data", "doc_db"}));
  app.add_flag("--abort-on-first", opt.abort_on_first,
               "stop simulation at the first error");
  app.add_flag("--json", opt.json_output, "machine-readable output");
  app.add_flag("--ask", opt.ask, "ask an expert (stdin) about ambiguous sentences");
  app.add_option("--chat-model", opt.chat_model, "model tag for agent prompts");
  app.add_option("--scrape-model", opt.scrape_model, "model tag for extraction");

  std::string doc_path, xdl_path, out_path, title, pairs_path, cad_path, ns_name, text;
  bool as_procedure = false;
  std::size_t k = 5;
  double threshold = 0.45;

  auto* c_extract = app.add_subcommand("extract", "document -> knowledge graph");
  c_extract->add_option("doc", doc_path, "text document")->required();
  c_extract->add_option("-o,--out", out_path, "output path")->default_val("kg.json");

  auto* c_sanitize = app.add_subcommand("sanitize", "resolve procedure ambiguities");
  c_sanitize->add_option("procedure", doc_path, "procedure text file")->required();
  c_sanitize->add_option("--title", title, "procedure title");

  auto* c_translate =
      app.add_subcommand("translate", "procedure -> validated XDL (full loop)");
  c_translate->add_option("procedure", doc_path, "procedure text file")->required();
  c_translate->add_option("--title", title, "procedure title");

  auto* c_validate = app.add_subcommand("validate", "check XDL offline (no LLM)");
  c_validate->add_option("xdl", xdl_path, "XDL file")->required();

  auto* c_simulate = app.add_subcommand("simulate", "run the hardware simulation");
  c_simulate->add_option("xdl", xdl_path, "XDL file")->required();

  auto* c_pipeline =
      app.add_subcommand("pipeline", "extract + sanitize + translate a document");
  c_pipeline->add_option("doc", doc_path, "document or procedure file")->required();
  c_pipeline->add_flag("--procedure", as_procedure,
                       "treat the input as a single procedure, skip extraction");
  c_pipeline->add_option("--kg-out", out_path, "knowledge graph output")
      ->default_val("kg.json");

  auto* c_memory = app.add_subcommand("memory", "vector store maintenance");
  auto* c_mem_seed = c_memory->add_subcommand("seed", "load pairs and CAD entries");
  c_mem_seed->add_option("--pairs", pairs_path, "JSON array of {procedure, xdl}");
  c_mem_seed->add_option("--cad", cad_path, "JSONL of {fragment, explanation}");
  auto* c_mem_list = c_memory->add_subcommand("list", "dump a namespace");
  c_mem_list->add_option("namespace", ns_name)->required();
  auto* c_mem_query = c_memory->add_subcommand("query", "top-k similarity search");
  c_mem_query->add_option("namespace", ns_name)->required();
  c_mem_query->add_option("text", text)->required();
  c_mem_query->add_option("-k", k, "results")->default_val(5);

  auto* c_gaps = app.add_subcommand("gaps", "mine unsupported-step suggestions");
  auto* c_gaps_report = c_gaps->add_subcommand("report", "emit roadmap.md");
  c_gaps_report->add_option("-o,--out", out_path, "output path")->default_val("roadmap.md");
  c_gaps_report->add_option("--threshold", threshold, "cluster merge threshold");

  auto* c_graph = app.add_subcommand("graph", "hardware graph utilities");
  auto* c_graph_lint = c_graph->add_subcommand("lint", "print all schema violations");
  c_graph_lint->add_option("graph_json", doc_path, "graph file")->required();

  app.require_subcommand(1);

  // global options may appear after the subcommand name
  for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; })) {
    sub->fallthrough();
    for (CLI::App* nested : sub->get_subcommands([](const CLI::App*) { return true; })) {
      nested->fallthrough();
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_extract->parsed()) return cmd_extract(opt, doc_path, out_path);
    if (c_sanitize->parsed()) return cmd_sanitize(opt, doc_path, title);
    if (c_translate->parsed()) return cmd_translate(opt, doc_path, title);
    if (c_validate->parsed()) return cmd_validate(opt, xdl_path, true);
    if (c_simulate->parsed()) return cmd_simulate(opt, xdl_path);
    if (c_pipeline->parsed()) return cmd_pipeline(opt, doc_path, as_procedure, out_path);
    if (c_memory->parsed()) {
      if (c_mem_seed->parsed()) return cmd_memory_seed(opt, pairs_path, cad_path);
      if (c_mem_list->parsed()) return cmd_memory_list(opt, ns_name);
      if (c_mem_query->parsed()) return cmd_memory_query(opt, ns_name, text, k);
    }
    if (c_gaps->parsed() && c_gaps_report->parsed()) {
      return cmd_gaps_report(opt, out_path, threshold);
    }
    if (c_graph->parsed() && c_graph_lint->parsed()) {
      return cmd_graph_lint(opt, doc_path);
    }
    std::cerr << "no subcommand\n";
    return kInfra;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfra;
  }
}
