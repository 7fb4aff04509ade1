// Regenerates fixtures/: the demo mock scripts, a world file and its
// extractions for the evaluate/render/agent-run commands, and demo.toml.
#include <filesystem>
#include <iostream>

#include "../tests/support/demo_script.hpp"
#include "w2w/text.hpp"

namespace fs = std::filesystem;
using namespace w2w;

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: gen_fixtures <fixtures dir>\n";
    return 1;
  }
  const fs::path dir = argv[1];
  fs::create_directories(dir);
  write_file((dir / "demo_script.json").string(), script_to_json(demo::full_mode_script(3, 2)));
  write_file((dir / "demo_direct_script.json").string(), script_to_json(demo::direct_mode_script(3)));

  const auto& rows = demo::world_variants()[0];
  const auto world = WorldGrid::from_text(demo::join_rows(rows));
  write_file((dir / "demo_world.txt").string(), world.to_text() + "\n");
  StoryPackage pkg;
  pkg.story_text = demo::story_text();
  pkg.paragraph_count = count_paragraphs(pkg.story_text);
  pkg.legend = demo::legend();
  pkg.characters = {{"Mira", "young archer hero with a green hood", CharacterRole::Protagonist, '@'},
                    {"Grak", "goblin thief", CharacterRole::Antagonist, 'g'},
                    {"Tomas", "village elder", CharacterRole::NonPlayer, 'T'}};
  pkg.goals = demo::goals();
  write_file((dir / "demo_extractions.json").string(), dump_json(Json(pkg)) + "\n");

  std::vector<ScriptEntry> agent;
  for (const auto& acts : demo::solve_episode(world, demo::positioned_goals(world), pkg.legend, '@')) {
    agent.push_back({ExtractionStep::AgentActions, demo::actions_reply(acts)});
  }
  write_file((dir / "demo_agent_script.json").string(), script_to_json(agent));

  write_file((dir / "demo.toml").string(),
             "# Full-mode demo run against the scripted mock provider.\n"
             "mode = \"full\"\n"
             "seed = 1\n"
             "story_paragraphs = [4, 5]\n"
             "objective_count = 8\n"
             "important_tile_cap = 15\n"
             "rounds = 3\n"
             "agent_episodes = 2\n"
             "output_root = \"runs\"\n"
             "\n"
             "[provider]\n"
             "kind = \"mock\"\n"
             "script = \"demo_script.json\"\n"
             "\n"
             "[tilesets]\n"
             "environment = \"../assets/placeholder/environment.csv\"\n"
             "character = \"../assets/placeholder/characters.csv\"\n");
  std::cout << "fixtures written to " << dir.string() << "\n";
  return 0;
}
