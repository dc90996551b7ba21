/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Federated round orchestration and aggregation.

#ifndef GOLDFISH_SERVER_H_
#define GOLDFISH_SERVER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "goldfish/data.h"
#include "goldfish/loss.h"
#include "goldfish/nn.h"
#include "goldfish/unlearn.h"

namespace goldfish::fed {

enum class AggregationMode { kFedAvg, kMseAdaptive };

std::string to_string(AggregationMode mode);
AggregationMode parse_aggregation(const std::string& name);

// Which unsharded clients restart from the initial parameters in a deletion
// round: every client, or only the ones that delete data.
enum class ReinitScope { kAll, kUnlearned };

std::string to_string(ReinitScope scope);
ReinitScope parse_reinit_scope(const std::string& name);

struct GlobalModel {
  nn::ParameterVector params;
  std::size_t round = 0;
  AggregationMode mode = AggregationMode::kMseAdaptive;
};

struct ClientReport {
  int client_id = 0;
  nn::ParameterVector params;
  std::size_t dataset_size = 0;
  double mse = 0.0;  // server-side test MSE; only scored for adaptive aggregation
};

struct RoundPlan {
  std::size_t round = 1;  // must equal global.round + 1
  std::vector<data::DeletionRequest> deletions;
  unlearn::TrainingBudget budget;
  loss::LossWeights weights;
};

// Size-weighted mean. Throws PreconditionError on an empty list and
// ShapeError on unequal lengths.
nn::ParameterVector fedavg_aggregate(std::span<const ClientReport> reports);

constexpr double kMseEpsilon = 1e-12;

// exp(-(me - mean) / mean). Throws DomainError when mean <= eps.
double mse_weight(double me, double mean, double eps = kMseEpsilon);

// Normalized aggregation weights W_c / theta; uniform when the mean MSE is
// at most kMseEpsilon.
std::vector<double> adaptive_weights(std::span<const ClientReport> reports);

nn::ParameterVector adaptive_aggregate(std::span<const ClientReport> reports);

// Mean over examples and classes of (softmax(logits) - onehot)^2.
double compute_client_mse(const nn::NetworkSpec& spec, const nn::ParameterVector& params,
                          const data::LabeledDataset& test);

struct ClientRound {
  int client_id = 0;
  bool unlearned = false;  // processed a deletion request this round
  unlearn::TrainingReport report;
  double mse = 0.0;
};

struct RoundMetrics {
  std::size_t round = 0;
  bool deletion_round = false;
  loss::LossComponents components;  // mean over clients of final-epoch means
  double local_epochs = 0.0;        // summed over clients
  std::vector<ClientRound> clients;
};

struct ServerOptions {
  AggregationMode mode = AggregationMode::kMseAdaptive;
  ReinitScope reinit_scope = ReinitScope::kAll;
  bool normalize_checkpoint = false;
  std::uint64_t seed = 0;
};

class FederatedServer {
 public:
  // `test_set` is the server-held data used to score client MSE.
  FederatedServer(nn::NetworkSpec spec, data::LabeledDataset test_set, ServerOptions options);

  const nn::NetworkSpec& spec() const { return spec_; }
  const ServerOptions& options() const { return options_; }

  // omega_0, deterministic in spec.seed.
  nn::ParameterVector initial_params() const;
  GlobalModel initial_model() const;

  // Runs one round. Without deletions every client runs local training from
  // the global model; with deletions the global model becomes the teacher,
  // deleting clients unlearn their D_f and the others distill with an empty
  // D_f. Clients train concurrently; a failure aborts the round with a
  // ClientError naming the client. `clients` is updated in place (deleted
  // rows leave client data permanently).
  GlobalModel run_round(const GlobalModel& global, std::vector<unlearn::ClientState>& clients,
                        const RoundPlan& plan, RoundMetrics* metrics = nullptr) const;

  using RoundCallback = std::function<void(const GlobalModel&, const RoundMetrics&)>;

  // Standard federated training from omega_0 for `rounds` rounds on the
  // given (already deleted) client data.
  GlobalModel retrain_baseline(std::vector<unlearn::ClientState> clients, std::size_t rounds,
                               const unlearn::TrainingBudget& budget,
                               const RoundCallback& on_round = {}) const;

  nn::ParameterVector aggregate(std::span<const ClientReport> reports) const;

 private:
  nn::NetworkSpec spec_;
  data::LabeledDataset test_set_;
  ServerOptions options_;
};

}  // namespace goldfish::fed

#endif  // GOLDFISH_SERVER_H_
