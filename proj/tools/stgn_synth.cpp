/*
 * Copyright 2026 The STGN Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Writes a planted genre trace in the ingest text format.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "stgn/graph_store.hpp"
#include "stgn/synthetic.hpp"

int main(int argc, char** argv) {
  stgn::PlantedTraceOptions o;
  std::string out;
  CLI::App app{"planted synthetic trace"};
  app.add_option("--out", out, "output file")->required();
  app.add_option("--users", o.users);
  app.add_option("--items", o.items);
  app.add_option("--genres", o.genres);
  app.add_option("--events", o.events);
  app.add_option("--late-users", o.late_users);
  app.add_option("--spacing", o.spacing, "seconds between events");
  app.add_option("--seed", o.seed);
  CLI11_PARSE(app, argc, argv);
  try {
    const auto recs = stgn::planted_trace(o);
    std::ofstream f(out);
    if (!f) {
      std::cerr << "cannot write " << out << "\n";
      return 1;
    }
    f << "timestamp,user,item,duration,genres\n";
    for (const auto& r : recs) f << stgn::format_trace_line(r) << "\n";
    return f.good() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
