#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sgrel/errors.hpp"

namespace {

using sgrel::cli::ConfigFile;

/// Fills `value` from the config file when the flag was not given on the
/// command line. The config key is the long flag name without the leading
/// dashes, e.g. --w-sup -> "w-sup".
template <class T>
void fall_back(const CLI::App& cmd, const std::string& flag, const ConfigFile& cfg, T& value) {
  if (cmd.count(flag) > 0) return;
  const std::string key = flag.substr(2);
  if (cfg.values.contains(key)) value = cfg.values.at(key).template get<T>();
}

ConfigFile load_config(const std::string& path) {
  return path.empty() ? ConfigFile{} : ConfigFile::load(path);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scene-graph relation tool"};
  app.require_subcommand(1);

  sgrel::cli::TrainToyOptions train;
  CLI::App* train_cmd = app.add_subcommand("train-toy", "train on a synthetic overfit dataset");
  train_cmd->add_option("--config", train.config_path, "JSON config supplying unset flags");
  train_cmd->add_option("--seed", train.seed, "RNG seed");
  train_cmd->add_option("--out", train.out_dir, "output directory");
  train_cmd->add_option("--dim", train.d, "feature dimension");
  train_cmd->add_option("--pairs", train.pairs, "number of training pairs");
  train_cmd->add_option("--relations", train.relations, "vocabulary size (multiple of 3)");
  train_cmd->add_option("--steps", train.steps, "SGD steps");
  train_cmd->add_option("--lr", train.lr, "learning rate");
  train_cmd->add_option("--w-sup", train.w_sup, "super-category loss weight");
  train_cmd->add_option("--w-sub", train.w_sub, "within-category loss weight");
  train_cmd->add_option("--w-con", train.w_con, "contrastive loss weight");
  train_cmd->add_option("--tau", train.tau, "contrastive temperature");
  train_cmd->add_option("--channels", train.channels,
                        "pooled feature channels; > 0 trains the input projection");

  sgrel::cli::InferOptions infer;
  CLI::App* infer_cmd = app.add_subcommand("infer", "rank relation candidates for scene graphs");
  infer_cmd->add_option("--config", infer.config_path, "JSON config supplying unset flags");
  infer_cmd->add_option("--seed", infer.seed, "RNG seed recorded in metadata");
  infer_cmd->add_option("--checkpoint", infer.checkpoint, "checkpoint directory");
  infer_cmd->add_option("--graphs", infer.graphs, "input scene graphs (JSONL)");
  infer_cmd->add_option("--vocab", infer.vocab, "vocabulary JSON");
  infer_cmd->add_option("--hierarchy", infer.hierarchy, "relation hierarchy JSON");
  infer_cmd->add_option("--out", infer.out, "output JSONL");
  infer_cmd->add_option("--top-k", infer.top_k, "keep only the k best candidates (0 = all)");
  infer_cmd->add_option("--jobs", infer.jobs, "worker threads");

  sgrel::cli::ValidateOptions val;
  CLI::App* val_cmd = app.add_subcommand("validate", "filter ranked candidates with a language model");
  val_cmd->add_option("--config", val.config_path, "JSON config supplying unset flags");
  val_cmd->add_option("--seed", val.seed, "RNG seed recorded in metadata");
  val_cmd->add_option("--graphs", val.graphs, "ranked scene graphs (JSONL)");
  val_cmd->add_option("--vocab", val.vocab, "vocabulary JSON");
  val_cmd->add_option("--out", val.out, "filtered graphs (JSONL)");
  val_cmd->add_option("--sets-out", val.sets_out, "alignment sets JSON");
  val_cmd->add_option("--whitelist", val.whitelist_path, "triplet set never queried");
  val_cmd->add_option("--cache", val.cache_path, "verdict cache JSON, loaded and saved back");
  val_cmd->add_option("--backend", val.backend, "mock or http");
  val_cmd->add_option("--endpoint", val.endpoint, "http backend URL");
  val_cmd->add_option("--model", val.model, "model name sent to the backend");
  val_cmd->add_option("--api-key-env", val.api_key_env, "environment variable holding the API key");
  val_cmd->add_option("--response-path", val.response_path, "dotted path to the completion text");
  val_cmd->add_option("--request-log", val.request_log, "JSONL request log");
  val_cmd->add_option("--mock-blacklist", val.mock_blacklist_path,
                      "text file of phrases the mock rejects");
  val_cmd->add_option("--mock-default", val.mock_default, "mock answer when no rule matches (yes/no)");
  val_cmd->add_option("--strategy", val.strategy, "per-triplet or batched");
  val_cmd->add_option("--vote-template", val.vote_template_paths,
                      "prompt template file, repeatable");
  val_cmd->add_option("--batched-template", val.batched_template_path, "batched prompt template file");
  val_cmd->add_option("--skip-top", val.skip_top, "trusted candidates left untouched");
  val_cmd->add_option("--window", val.window, "candidates validated after the trusted block");
  val_cmd->add_option("--votes", val.votes, "votes per triplet (odd)");
  val_cmd->add_option("--jobs", val.jobs, "worker threads");
  val_cmd->add_option("--timeout", val.timeout, "per-request timeout in seconds");
  val_cmd->add_option("--max-retries", val.max_retries, "retries after the first attempt");
  val_cmd->add_option("--backoff", val.backoff, "base backoff in seconds");
  val_cmd->add_option("--max-in-flight", val.max_in_flight, "concurrent request cap");

  sgrel::cli::EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
  eval_cmd->add_option("--config", eval.config_path, "JSON config supplying unset flags");
  eval_cmd->add_option("--seed", eval.seed, "RNG seed recorded in metadata");
  eval_cmd->add_option("--pred", eval.pred, "predicted scene graphs (JSONL)");
  eval_cmd->add_option("--gt", eval.gt, "ground-truth graphs; omitted reuses --pred's gt");
  eval_cmd->add_option("--vocab", eval.vocab, "vocabulary JSON");
  eval_cmd->add_option("--mode", eval.mode, "predcls, sgcls or sgdet");
  eval_cmd->add_option("--k", eval.ks, "recall cutoffs, repeatable");
  eval_cmd->add_option("--train-triplets", eval.train_triplets,
                       "training triplets enabling zero-shot recall");
  eval_cmd->add_option("--recall-averaging", eval.recall_averaging, "micro or per-image");
  eval_cmd->add_option("--out", eval.out, "report JSON");

  sgrel::cli::ClusterOptions cluster;
  CLI::App* cluster_cmd = app.add_subcommand("cluster", "derive a relation hierarchy from embeddings");
  cluster_cmd->add_option("--config", cluster.config_path, "JSON config supplying unset flags");
  cluster_cmd->add_option("--seed", cluster.seed, "RNG seed");
  cluster_cmd->add_option("--embeddings", cluster.embeddings, "relation embedding JSON");
  cluster_cmd->add_option("--vocab", cluster.vocab,
                          "vocabulary JSON; omitted uses the embedding names");
  cluster_cmd->add_option("--k", cluster.k, "number of clusters");
  cluster_cmd->add_flag("--l2-normalize", cluster.l2_normalize, "normalize rows before clustering");
  cluster_cmd->add_option("--out", cluster.out, "hierarchy JSON");

  sgrel::cli::DistillSetsOptions distill;
  CLI::App* distill_cmd =
      app.add_subcommand("distill-sets", "score candidates against commonsense alignment sets");
  distill_cmd->add_option("--config", distill.config_path, "JSON config supplying unset flags");
  distill_cmd->add_option("--seed", distill.seed, "RNG seed recorded in metadata");
  distill_cmd->add_option("--sets", distill.sets, "alignment sets JSON");
  distill_cmd->add_option("--graphs", distill.graphs, "ranked scene graphs (JSONL)");
  distill_cmd->add_option("--vocab", distill.vocab, "vocabulary JSON");
  distill_cmd->add_option("--lambda-weak", distill.lambda_weak, "penalty for unlisted triplets");
  distill_cmd->add_option("--lambda-strong", distill.lambda_strong, "penalty for violated triplets");
  distill_cmd->add_option("--out", distill.out, "report JSON");

  try {
    app.parse(argc, argv);

    if (*train_cmd) {
      const ConfigFile cfg = load_config(train.config_path);
      fall_back(*train_cmd, "--seed", cfg, train.seed);
      fall_back(*train_cmd, "--out", cfg, train.out_dir);
      fall_back(*train_cmd, "--dim", cfg, train.d);
      fall_back(*train_cmd, "--pairs", cfg, train.pairs);
      fall_back(*train_cmd, "--relations", cfg, train.relations);
      fall_back(*train_cmd, "--steps", cfg, train.steps);
      fall_back(*train_cmd, "--lr", cfg, train.lr);
      fall_back(*train_cmd, "--w-sup", cfg, train.w_sup);
      fall_back(*train_cmd, "--w-sub", cfg, train.w_sub);
      fall_back(*train_cmd, "--w-con", cfg, train.w_con);
      fall_back(*train_cmd, "--tau", cfg, train.tau);
      fall_back(*train_cmd, "--channels", cfg, train.channels);
      return sgrel::cli::run_train_toy(train);
    }
    if (*infer_cmd) {
      const ConfigFile cfg = load_config(infer.config_path);
      fall_back(*infer_cmd, "--seed", cfg, infer.seed);
      fall_back(*infer_cmd, "--checkpoint", cfg, infer.checkpoint);
      fall_back(*infer_cmd, "--graphs", cfg, infer.graphs);
      fall_back(*infer_cmd, "--vocab", cfg, infer.vocab);
      fall_back(*infer_cmd, "--hierarchy", cfg, infer.hierarchy);
      fall_back(*infer_cmd, "--out", cfg, infer.out);
      fall_back(*infer_cmd, "--top-k", cfg, infer.top_k);
      fall_back(*infer_cmd, "--jobs", cfg, infer.jobs);
      require(!infer.checkpoint.empty(), "infer needs --checkpoint");
      require(!infer.graphs.empty(), "infer needs --graphs");
      require(!infer.vocab.empty(), "infer needs --vocab");
      require(!infer.hierarchy.empty(), "infer needs --hierarchy");
      return sgrel::cli::run_infer(infer);
    }
    if (*val_cmd) {
      const ConfigFile cfg = load_config(val.config_path);
      fall_back(*val_cmd, "--seed", cfg, val.seed);
      fall_back(*val_cmd, "--graphs", cfg, val.graphs);
      fall_back(*val_cmd, "--vocab", cfg, val.vocab);
      fall_back(*val_cmd, "--out", cfg, val.out);
      fall_back(*val_cmd, "--sets-out", cfg, val.sets_out);
      fall_back(*val_cmd, "--whitelist", cfg, val.whitelist_path);
      fall_back(*val_cmd, "--cache", cfg, val.cache_path);
      fall_back(*val_cmd, "--backend", cfg, val.backend);
      fall_back(*val_cmd, "--endpoint", cfg, val.endpoint);
      fall_back(*val_cmd, "--model", cfg, val.model);
      fall_back(*val_cmd, "--api-key-env", cfg, val.api_key_env);
      fall_back(*val_cmd, "--response-path", cfg, val.response_path);
      fall_back(*val_cmd, "--request-log", cfg, val.request_log);
      fall_back(*val_cmd, "--mock-blacklist", cfg, val.mock_blacklist_path);
      fall_back(*val_cmd, "--mock-default", cfg, val.mock_default);
      fall_back(*val_cmd, "--strategy", cfg, val.strategy);
      fall_back(*val_cmd, "--vote-template", cfg, val.vote_template_paths);
      fall_back(*val_cmd, "--batched-template", cfg, val.batched_template_path);
      fall_back(*val_cmd, "--skip-top", cfg, val.skip_top);
      fall_back(*val_cmd, "--window", cfg, val.window);
      fall_back(*val_cmd, "--votes", cfg, val.votes);
      fall_back(*val_cmd, "--jobs", cfg, val.jobs);
      fall_back(*val_cmd, "--timeout", cfg, val.timeout);
      fall_back(*val_cmd, "--max-retries", cfg, val.max_retries);
      fall_back(*val_cmd, "--backoff", cfg, val.backoff);
      fall_back(*val_cmd, "--max-in-flight", cfg, val.max_in_flight);
      require(!val.graphs.empty(), "validate needs --graphs");
      require(!val.vocab.empty(), "validate needs --vocab");
      return sgrel::cli::run_validate(val);
    }
    if (*eval_cmd) {
      const ConfigFile cfg = load_config(eval.config_path);
      fall_back(*eval_cmd, "--seed", cfg, eval.seed);
      fall_back(*eval_cmd, "--pred", cfg, eval.pred);
      fall_back(*eval_cmd, "--gt", cfg, eval.gt);
      fall_back(*eval_cmd, "--vocab", cfg, eval.vocab);
      fall_back(*eval_cmd, "--mode", cfg, eval.mode);
      fall_back(*eval_cmd, "--k", cfg, eval.ks);
      fall_back(*eval_cmd, "--train-triplets", cfg, eval.train_triplets);
      fall_back(*eval_cmd, "--recall-averaging", cfg, eval.recall_averaging);
      fall_back(*eval_cmd, "--out", cfg, eval.out);
      require(!eval.pred.empty(), "eval needs --pred");
      require(!eval.vocab.empty(), "eval needs --vocab");
      return sgrel::cli::run_eval(eval);
    }
    if (*cluster_cmd) {
      const ConfigFile cfg = load_config(cluster.config_path);
      fall_back(*cluster_cmd, "--seed", cfg, cluster.seed);
      fall_back(*cluster_cmd, "--embeddings", cfg, cluster.embeddings);
      fall_back(*cluster_cmd, "--vocab", cfg, cluster.vocab);
      fall_back(*cluster_cmd, "--k", cfg, cluster.k);
      fall_back(*cluster_cmd, "--l2-normalize", cfg, cluster.l2_normalize);
      fall_back(*cluster_cmd, "--out", cfg, cluster.out);
      require(!cluster.embeddings.empty(), "cluster needs --embeddings");
      return sgrel::cli::run_cluster(cluster);
    }
    if (*distill_cmd) {
      const ConfigFile cfg = load_config(distill.config_path);
      fall_back(*distill_cmd, "--seed", cfg, distill.seed);
      fall_back(*distill_cmd, "--sets", cfg, distill.sets);
      fall_back(*distill_cmd, "--graphs", cfg, distill.graphs);
      fall_back(*distill_cmd, "--vocab", cfg, distill.vocab);
      fall_back(*distill_cmd, "--lambda-weak", cfg, distill.lambda_weak);
      fall_back(*distill_cmd, "--lambda-strong", cfg, distill.lambda_strong);
      fall_back(*distill_cmd, "--out", cfg, distill.out);
      require(!distill.sets.empty(), "distill-sets needs --sets");
      require(!distill.graphs.empty(), "distill-sets needs --graphs");
      require(!distill.vocab.empty(), "distill-sets needs --vocab");
      return sgrel::cli::run_distill_sets(distill);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sgrel::cli::kOk : sgrel::cli::kConfigError;
  } catch (const sgrel::AuthError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sgrel::cli::kBackendError;
  } catch (const sgrel::BackendUnavailable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sgrel::cli::kBackendError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sgrel::cli::kConfigError;
  }
  return sgrel::cli::kConfigError;
}
