#include "daept/dae.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "daept/error.hpp"
#include "daept/serialize.hpp"
#include "daept/training.hpp"

namespace daept {

void DAEConfig::validate() const {
  if (input_dim == 0) throw ConfigError("dae: input dimension must be positive");
  if (code_dim == 0) throw ConfigError("dae: code dimension must be positive");
  if (!(corruption_rate >= 0.0 && corruption_rate < 1.0)) {
    throw ConfigError("dae: corruption rate must be in [0, 1)");
  }
  if (epochs == 0) throw ConfigError("dae: epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("dae: batch size must be >= 1");
}

std::string to_string(TransferStrategy s) {
  return s == TransferStrategy::EncoderOnly ? "encoder" : "complete";
}

TransferStrategy parse_strategy(const std::string& s) {
  if (s == "encoder") return TransferStrategy::EncoderOnly;
  if (s == "complete") return TransferStrategy::CompleteAE;
  throw ConfigError("unknown transfer strategy '" + s + "' (encoder|complete)");
}

Network TrainedDAE::network() const {
  return Network(config.input_dim,
                 {make_dropout(config.corruption_rate),
                  make_dense(encoder.weights, encoder.bias, encoder.activation),
                  make_dense(decoder.weights, decoder.bias, decoder.activation)});
}

Network build_dae(const DAEConfig& config, RngStream& rng) {
  config.validate();
  RngStream enc_rng = rng.derive(0);
  RngStream dec_rng = rng.derive(1);
  return Network(config.input_dim,
                 {make_dropout(config.corruption_rate),
                  make_dense(config.input_dim, config.code_dim, Activation::ReLU, enc_rng),
                  make_dense(config.code_dim, config.input_dim, Activation::Linear, dec_rng)});
}

TrainedDAE train_dae(Network net, const Matrix& x_train, const Matrix& x_val,
                     const DAEConfig& config, RngStream& rng, const DaeEpochHook& on_epoch) {
  config.validate();
  if (x_train.cols() != config.input_dim || x_val.cols() != config.input_dim) {
    throw ConfigError("train_dae: data width does not match the configured input dimension");
  }
  if (net.input_dim() != config.input_dim || net.layers().size() != 3 ||
      !std::holds_alternative<Dense>(net.layer(1).kind) ||
      !std::holds_alternative<Dense>(net.layer(2).kind)) {
    throw ConfigError("train_dae: network is not a dropout/encoder/decoder stack");
  }

  AdamState adam(config.adam);
  std::vector<EpochHistory> history;
  history.reserve(config.epochs);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const EpochLoss tl = train_epoch(net, adam, x_train, x_train, config.reconstruction_loss,
                                     config.batch_size, rng.derive(epoch), epoch);
    const double vl = loss_value(config.reconstruction_loss, infer(net, x_val), x_val);
    if (!std::isfinite(vl)) {
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch + 1));
    }
    history.push_back({tl.mean_loss, vl});
    if (on_epoch) on_epoch(epoch, net);
  }

  return TrainedDAE{std::get<Dense>(net.layer(1).kind), std::get<Dense>(net.layer(2).kind),
                    config, std::move(history)};
}

std::vector<Layer> export_layers(const TrainedDAE& dae, TransferStrategy strategy) {
  std::vector<Layer> out;
  out.push_back(Layer{dae.encoder, true});
  if (strategy == TransferStrategy::CompleteAE) out.push_back(Layer{dae.decoder, true});
  return out;
}

void write_dae_history(const std::filesystem::path& path,
                       const std::vector<EpochHistory>& history) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << (i + 1) << ',' << format_real(history[i].train_loss) << ','
        << format_real(history[i].val_loss) << '\n';
  }
}

std::vector<EpochHistory> read_dae_history(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "epoch,train_loss,val_loss") throw DataError(path.string() + ": bad header");
  std::vector<EpochHistory> history;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string epoch, train, val;
    std::getline(row, epoch, ',');
    std::getline(row, train, ',');
    std::getline(row, val, ',');
    try {
      history.push_back({std::stod(train), std::stod(val)});
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return history;
}

void save_dae(const std::filesystem::path& model_path,
              const std::filesystem::path& history_path, const TrainedDAE& dae) {
  const DAEConfig& c = dae.config;
  Metadata meta{{"kind", "dae"},
                {"code_dim", std::to_string(c.code_dim)},
                {"corruption_rate", format_real(c.corruption_rate)},
                {"epochs", std::to_string(c.epochs)},
                {"batch_size", std::to_string(c.batch_size)},
                {"loss", to_string(c.reconstruction_loss)},
                {"learning_rate", format_real(c.adam.learning_rate)},
                {"beta1", format_real(c.adam.beta1)},
                {"beta2", format_real(c.adam.beta2)},
                {"adam_epsilon", format_real(c.adam.epsilon)}};
  save_network(model_path, dae.network(), meta);
  write_dae_history(history_path, dae.history);
}

TrainedDAE load_dae(const std::filesystem::path& model_path,
                    const std::filesystem::path& history_path) {
  NetworkFile file = load_network(model_path);
  const Network& net = file.network;
  if (file.meta["kind"] != "dae" || net.layers().size() != 3 ||
      !std::holds_alternative<Dropout>(net.layer(0).kind) ||
      !std::holds_alternative<Dense>(net.layer(1).kind) ||
      !std::holds_alternative<Dense>(net.layer(2).kind)) {
    throw DataError(model_path.string() + ": not a denoising autoencoder snapshot");
  }
  TrainedDAE dae;
  dae.encoder = std::get<Dense>(net.layer(1).kind);
  dae.decoder = std::get<Dense>(net.layer(2).kind);
  try {
    dae.config.input_dim = net.input_dim();
    dae.config.code_dim = std::stoul(file.meta.at("code_dim"));
    dae.config.corruption_rate = std::stod(file.meta.at("corruption_rate"));
    dae.config.epochs = std::stoul(file.meta.at("epochs"));
    dae.config.batch_size = std::stoul(file.meta.at("batch_size"));
    dae.config.reconstruction_loss =
        file.meta.at("loss") == "bce" ? LossKind::BinaryCrossEntropy : LossKind::MSE;
    dae.config.adam.learning_rate = std::stod(file.meta.at("learning_rate"));
    dae.config.adam.beta1 = std::stod(file.meta.at("beta1"));
    dae.config.adam.beta2 = std::stod(file.meta.at("beta2"));
    dae.config.adam.epsilon = std::stod(file.meta.at("adam_epsilon"));
  } catch (const std::exception& e) {
    throw DataError(model_path.string() + ": incomplete metadata (" + e.what() + ")");
  }
  if (dae.config.code_dim != dae.encoder.weights.cols()) {
    throw DataError(model_path.string() + ": code_dim metadata disagrees with encoder");
  }
  if (!history_path.empty()) dae.history = read_dae_history(history_path);
  return dae;
}

}  // namespace daept
