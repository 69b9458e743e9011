#include "driftwatch/synth.hpp"

#include "driftwatch/rng.hpp"
#include "driftwatch/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace driftwatch {

using nlohmann::json;

ScenarioSpec ScenarioSpec::from_text(const std::string& text) {
  ScenarioSpec spec;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "windows") spec.windows = std::stoi(value);
    else if (key == "drift_window") spec.drift_window = std::stoi(value);
    else if (key == "window_ns") spec.window_ns = std::stoll(value);
    else if (key == "attack_windows") {
      spec.attack_windows.clear();
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) spec.attack_windows.push_back(std::stoi(item));
    } else {
      throw ConfigError("scenario: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

ScenarioSpec ScenarioSpec::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_text(buf.str());
}

void ScenarioSpec::validate() const {
  if (windows <= 0) throw ConfigError("scenario: windows must be positive");
  if (window_ns <= 0) throw ConfigError("scenario: window_ns must be positive");
  for (int w : attack_windows)
    if (w < 0 || w >= windows)
      throw ConfigError("scenario: attack window " + std::to_string(w) + " out of range");
  if (drift_window >= windows) throw ConfigError("scenario: drift window out of range");
}

namespace {

struct GenEntity {
  std::string uuid;
  EntityKind kind = EntityKind::Process;
  std::string attr;
  bool attack = false;
};

struct GenEvent {
  std::int64_t ts = 0;
  std::string subject, object;
  EventKind kind = EventKind::Read;
  bool attack = false;
};

class Generator {
 public:
  explicit Generator(const ScenarioSpec& spec) : spec_(spec), rng_(mix64(spec.seed, 0x73796eull)) {}

  SynthOutput run();

 private:
  const std::string& ent(const std::string& uuid, EntityKind kind, const std::string& attr,
                         bool attack = false) {
    auto [it, inserted] = entities_.try_emplace(uuid, GenEntity{uuid, kind, attr, attack});
    if (attack) it->second.attack = true;
    return it->first;
  }

  void emit(const std::string& subj, const std::string& obj, EventKind kind, bool attack = false) {
    // Monotone in-window cursor; the first event of a window sits exactly at
    // the window start so detection windows align with generator windows.
    if (!window_started_) {
      window_started_ = true;
    } else {
      cursor_ += 1'000'000 + static_cast<std::int64_t>(draw_below(rng_, 400'000'000));
      if (cursor_ >= spec_.window_ns) cursor_ = spec_.window_ns - 1;
    }
    events_.push_back({window_base_ + cursor_, subj, obj, kind, attack});
    if (attack) ++attack_events_;
  }

  bool drifted(int w) const { return spec_.drift_window >= 0 && w >= spec_.drift_window; }

  void cron(int w);
  void web_server(int w);
  void backup(int w);
  void browser(int w);
  void mail(int w);
  void build_job(int w);
  void telemetry_exporter(int w);
  void maintenance(int w);
  void attack_stage(int w);

  ScenarioSpec spec_;
  std::mt19937_64 rng_;
  std::map<std::string, GenEntity> entities_;
  std::vector<GenEvent> events_;
  std::int64_t window_base_ = 0;
  std::int64_t cursor_ = 0;
  bool window_started_ = false;
  std::size_t attack_events_ = 0;
};

void Generator::cron(int w) {
  auto cron = ent("p:cron", EntityKind::Process, "cron");
  auto tab = ent("f:/etc/crontab", EntityKind::File, "/etc/crontab");
  emit(cron, tab, EventKind::Read);
  auto job = ent("p:cron:job:w" + std::to_string(w), EntityKind::Process, "logrotate");
  emit(cron, job, EventKind::Fork);
  auto logf = ent("f:/var/log/syslog", EntityKind::File, "/var/log/syslog");
  emit(job, logf, EventKind::Read);
  emit(job, logf, EventKind::Write);
  std::string arch_attr = "/var/log/archive/syslog." + std::to_string(w) + ".gz";
  auto arch = ent("f:" + arch_attr, EntityKind::File, arch_attr);
  emit(job, arch, EventKind::Write);
  emit(job, logf, EventKind::Write);
}

void Generator::web_server(int /*window*/) {
  auto nginx = ent("p:nginx", EntityKind::Process, "nginx");
  auto conf = ent("f:/etc/nginx/nginx.conf", EntityKind::File, "/etc/nginx/nginx.conf");
  auto access = ent("f:/var/log/nginx/access.log", EntityKind::File, "/var/log/nginx/access.log");
  emit(nginx, conf, EventKind::Read);
  int clients = 6 + static_cast<int>(draw_below(rng_, 3));
  for (int c = 0; c < clients; ++c) {
    std::string ip = "10.2.0." + std::to_string(10 + c) + ":" + std::to_string(40000 + c);
    auto sock = ent("s:" + ip, EntityKind::Socket, ip);
    int requests = 2 + static_cast<int>(draw_below(rng_, 2));
    for (int r = 0; r < requests; ++r) {
      std::string page_attr = "/srv/www/page" + std::to_string(draw_below(rng_, 8)) + ".html";
      auto page = ent("f:" + page_attr, EntityKind::File, page_attr);
      emit(nginx, sock, EventKind::Recvfrom);
      emit(nginx, page, EventKind::Read);
      emit(nginx, sock, EventKind::Sendto);
      emit(nginx, access, EventKind::Write);
    }
  }
}

void Generator::backup(int w) {
  auto tar = ent("p:tar", EntityKind::Process, "tar");
  for (int d = 0; d < 24; ++d) {
    std::string doc_attr = "/home/user/docs/report" + std::to_string(d) + ".md";
    auto doc = ent("f:" + doc_attr, EntityKind::File, doc_attr);
    emit(tar, doc, EventKind::Read);
  }
  std::string arch_attr = "/backup/home." + std::to_string(w) + ".tar";
  auto arch = ent("f:" + arch_attr, EntityKind::File, arch_attr);
  emit(tar, arch, EventKind::Write);
  emit(tar, arch, EventKind::Write);

  // editing session: fresh scratch process and draft file every window
  auto vi = ent("p:vi:w" + std::to_string(w), EntityKind::Process, "vi");
  auto swap_attr = "/home/user/docs/.draft" + std::to_string(w) + ".swp";
  auto swap = ent("f:" + swap_attr, EntityKind::File, swap_attr);
  for (int d = 0; d < 4; ++d) {
    std::string doc_attr = "/home/user/docs/report" + std::to_string(d) + ".md";
    auto doc = ent("f:" + doc_attr, EntityKind::File, doc_attr);
    emit(vi, doc, EventKind::Read);
    emit(vi, swap, EventKind::Write);
  }
}

void Generator::browser(int w) {
  auto main = ent("p:firefox:main", EntityKind::Process, "firefox");
  const char* pre_sites[] = {"146.112.61.108:443", "151.101.1.67:443", "92.122.145.220:443",
                             "13.33.88.40:443"};
  const char* post_sites[] = {"185.199.108.153:443", "104.21.32.7:443", "172.67.180.14:443",
                              "34.120.15.200:443"};
  auto& sites = drifted(w) ? post_sites : pre_sites;
  std::string cache_dir = drifted(w) ? "/home/user/.cache/ff-profile2/" : "/home/user/.cache/ff/";

  auto resolv = ent("f:/etc/resolv.conf", EntityKind::File, "/etc/resolv.conf");
  auto hosts = ent("f:/etc/hosts", EntityKind::File, "/etc/hosts");
  auto libc = ent("f:/lib/x86_64-linux-gnu/libc.so", EntityKind::File,
                  "/lib/x86_64-linux-gnu/libc.so");

  std::string first_cache;
  for (int tab = 0; tab < 12; ++tab) {
    // content processes are long-lived; each window they serve new visits
    std::string child_uuid = "p:firefox:tab" + std::to_string(tab);
    bool fresh = entities_.find(child_uuid) == entities_.end();
    auto child = ent(child_uuid, EntityKind::Process, "firefox");
    if (fresh) emit(main, child, EventKind::Clone);
    emit(child, libc, EventKind::Read);  // dropped by the whitelist filter
    emit(child, resolv, EventKind::Read);
    emit(child, hosts, EventKind::Read);
    int visits = 3 + static_cast<int>(draw_below(rng_, 3));
    for (int v = 0; v < visits; ++v) {
      const char* ip = sites[draw_below(rng_, 4)];
      auto sock = ent(std::string("s:") + ip, EntityKind::Socket, ip);
      // request/response rounds; the interleaved reads keep the rounds
      // causally distinct instead of collapsing into one merged receive
      int rounds = 2 + static_cast<int>(draw_below(rng_, 2));
      for (int r = 0; r < rounds; ++r) {
        emit(child, sock, EventKind::Sendto);
        int packets = 1 + static_cast<int>(draw_below(rng_, 3));
        for (int p = 0; p < packets; ++p) emit(child, sock, EventKind::Recvfrom);
        emit(child, hosts, EventKind::Read);
      }
    }
    std::string cache_attr = cache_dir + "entry" + std::to_string(tab) + ".dat";
    auto cache = ent("f:" + cache_attr, EntityKind::File, cache_attr);
    emit(child, cache, EventKind::Write);
    emit(child, cache, EventKind::Write);
    if (tab == 0) first_cache = cache;
  }
  // session restore: the main process picks up a tab's fresh cache, which
  // also keeps it carrying the children's network taint
  emit(main, first_cache, EventKind::Read);
}

void Generator::mail(int /*window*/) {
  auto mua = ent("p:thunderbird", EntityKind::Process, "thunderbird");
  auto inbox = ent("f:/var/mail/inbox", EntityKind::File, "/var/mail/inbox");
  auto outbox = ent("f:/home/user/.mail/outbox", EntityKind::File, "/home/user/.mail/outbox");
  auto smtp = ent("s:10.0.0.25:587", EntityKind::Socket, "10.0.0.25:587");
  auto imap = ent("s:10.0.0.25:993", EntityKind::Socket, "10.0.0.25:993");
  emit(mua, inbox, EventKind::Read);
  int polls = 2 + static_cast<int>(draw_below(rng_, 3));
  for (int p = 0; p < polls; ++p) emit(mua, imap, EventKind::Recvfrom);
  emit(mua, inbox, EventKind::Write);
  emit(mua, outbox, EventKind::Read);
  emit(mua, smtp, EventKind::Sendto);
  emit(mua, smtp, EventKind::Recvfrom);
}

void Generator::build_job(int w) {
  auto make = ent("p:make", EntityKind::Process, "make");
  std::string tree = drifted(w) ? "/src/webapp" : "/src/coreapp";
  auto mkfile = ent("f:" + tree + "/Makefile", EntityKind::File, tree + "/Makefile");
  auto libm = ent("f:/lib/x86_64-linux-gnu/libm.so", EntityKind::File,
                  "/lib/x86_64-linux-gnu/libm.so");
  emit(make, mkfile, EventKind::Read);
  auto script_attr = tree + "/build.sh";
  auto script = ent("f:" + script_attr, EntityKind::File, script_attr);
  auto sh = ent("p:sh:w" + std::to_string(w), EntityKind::Process, "sh");
  emit(make, sh, EventKind::Fork);
  emit(sh, script, EventKind::Exec);
  int units = 30 + static_cast<int>(draw_below(rng_, 5));
  for (int u = 0; u < units; ++u) {
    std::string cc_uuid = "p:cc1:w" + std::to_string(w) + ":" + std::to_string(u);
    auto cc = ent(cc_uuid, EntityKind::Process, "cc1");
    emit(make, cc, EventKind::Fork);
    emit(cc, libm, EventKind::Mmap);  // dropped by the whitelist filter
    if (u % 5 == 0) {
      auto pch = ent("f:" + tree + "/common.pch", EntityKind::File, tree + "/common.pch");
      emit(cc, pch, EventKind::Mmap);
    }
    std::string src_attr = tree + "/module" + std::to_string(u % 6) + ".c";
    auto src = ent("f:" + src_attr, EntityKind::File, src_attr);
    emit(cc, src, EventKind::Read);
    std::string hdr_attr = tree + "/common.h";
    auto hdr = ent("f:" + hdr_attr, EntityKind::File, hdr_attr);
    emit(cc, hdr, EventKind::Read);
    std::string obj_attr = "/build/out/module" + std::to_string(u % 6) + ".o";
    auto obj = ent("f:" + obj_attr, EntityKind::File, obj_attr);
    emit(cc, obj, EventKind::Write);
    emit(cc, obj, EventKind::Write);
  }
}

void Generator::telemetry_exporter(int w) {
  // push-only metrics daemon: stays clean because it never reads the socket
  auto statsd = ent("p:statsd", EntityKind::Process, "statsd");
  auto mon = ent("s:10.3.0.1:8125", EntityKind::Socket, "10.3.0.1:8125");
  auto spool = ent("f:/var/lib/statsd/spool.dat", EntityKind::File, "/var/lib/statsd/spool.dat");
  int beats = 6 + static_cast<int>(draw_below(rng_, 3));
  for (int b = 0; b < beats; ++b) {
    emit(statsd, spool, EventKind::Read);  // gather, then flush
    emit(statsd, mon, EventKind::Sendto);
  }
  emit(statsd, spool, EventKind::Write);
  auto agent = ent("p:metrics-agent:w" + std::to_string(w), EntityKind::Process, "metrics-agent");
  emit(statsd, agent, EventKind::Fork);
  emit(agent, mon, EventKind::Sendto);
  emit(agent, spool, EventKind::Read);
}

// Low-cadence jobs. Their entities reappear after multi-window gaps, which
// makes them look anomalous yet benign: steady rehearsal material.
void Generator::maintenance(int w) {
  if (w % 3 == 2) {
    auto db = ent("p:updatedb", EntityKind::Process, "updatedb");
    for (int d = 0; d < 6; ++d) {
      std::string share_attr = "/usr/share/dict/part" + std::to_string(d);
      auto share = ent("f:" + share_attr, EntityKind::File, share_attr);
      emit(db, share, EventKind::Read);
    }
    auto locate = ent("f:/var/cache/locate.db", EntityKind::File, "/var/cache/locate.db");
    emit(db, locate, EventKind::Write);
    emit(db, locate, EventKind::Write);
  }
  if (w % 4 == 1) {
    auto apt = ent("p:apt-check", EntityKind::Process, "apt-check");
    auto status = ent("f:/var/lib/pkg/status", EntityKind::File, "/var/lib/pkg/status");
    auto sources = ent("f:/etc/apt/sources.list", EntityKind::File, "/etc/apt/sources.list");
    auto log = ent("f:/var/cache/apt/check.log", EntityKind::File, "/var/cache/apt/check.log");
    emit(apt, status, EventKind::Read);
    emit(apt, sources, EventKind::Read);
    emit(apt, log, EventKind::Write);
  }
  if (w % 5 == 3) {
    auto scrub = ent("p:scrub", EntityKind::Process, "fsck");
    for (int d = 0; d < 4; ++d) {
      std::string dev_attr = "/var/spool/part" + std::to_string(d) + ".idx";
      auto dev = ent("f:" + dev_attr, EntityKind::File, dev_attr);
      emit(scrub, dev, EventKind::Read);
      emit(scrub, dev, EventKind::Write);
    }
  }
  if (w % 2 == 1) {
    auto lw = ent("p:logwatch", EntityKind::Process, "logwatch");
    auto syslog = ent("f:/var/log/syslog", EntityKind::File, "/var/log/syslog");
    auto report = ent("f:/var/cache/logwatch/report.txt", EntityKind::File,
                      "/var/cache/logwatch/report.txt");
    emit(lw, syslog, EventKind::Read);
    emit(lw, report, EventKind::Write);
    emit(lw, report, EventKind::Write);
  }
}

void Generator::attack_stage(int w) {
  auto pos = std::find(spec_.attack_windows.begin(), spec_.attack_windows.end(), w);
  if (pos == spec_.attack_windows.end()) return;
  std::size_t stage = static_cast<std::size_t>(pos - spec_.attack_windows.begin());
  bool last = stage + 1 == spec_.attack_windows.size();

  auto firefox = ent("p:firefox:main", EntityKind::Process, "firefox", true);
  auto c2 = ent("s:203.0.113.66:443", EntityKind::Socket, "203.0.113.66:443", true);
  auto drv = ent("f:/run/shm/drv", EntityKind::File, "/run/shm/drv", true);
  auto shell = ent("p:attack:shell", EntityKind::Process, "bash", true);
  auto dropper = ent("f:/tmp/.xcache", EntityKind::File, "/tmp/.xcache", true);

  if (stage == 0) {
    // compromise: in-memory exploit over the C2 channel, driver drop, shell
    emit(firefox, c2, EventKind::Sendto, true);
    for (int p = 0; p < 4; ++p) emit(firefox, c2, EventKind::Recvfrom, true);
    emit(firefox, drv, EventKind::Write, true);
    emit(firefox, shell, EventKind::Clone, true);
    emit(shell, drv, EventKind::Exec, true);
    emit(shell, dropper, EventKind::Write, true);
    emit(shell, c2, EventKind::Sendto, true);
  }
  if (!last && stage > 0) {
    // lateral staging between first and final window
    auto pwdb = ent("f:/etc/spwd.db", EntityKind::File, "/etc/spwd.db");
    emit(shell, pwdb, EventKind::Read, true);
    emit(shell, c2, EventKind::Sendto, true);
  }
  if (last) {
    auto daemon = ent("p:attack:daemon", EntityKind::Process, "sshd", true);
    auto logf = ent("f:/var/log/sshdlog", EntityKind::File, "/var/log/sshdlog", true);
    auto exfil = ent("s:198.51.100.9:1337", EntityKind::Socket, "198.51.100.9:1337", true);
    auto pwdb = ent("f:/etc/spwd.db", EntityKind::File, "/etc/spwd.db");
    emit(shell, daemon, EventKind::Clone, true);
    emit(daemon, dropper, EventKind::Exec, true);
    emit(daemon, pwdb, EventKind::Read, true);
    emit(daemon, logf, EventKind::Write, true);
    for (int p = 0; p < 3; ++p) emit(daemon, exfil, EventKind::Sendto, true);
    emit(daemon, exfil, EventKind::Recvfrom, true);
  }
}

SynthOutput Generator::run() {
  for (int w = 0; w < spec_.windows; ++w) {
    window_base_ = static_cast<std::int64_t>(w) * spec_.window_ns;
    cursor_ = 0;
    window_started_ = false;
    cron(w);
    browser(w);
    mail(w);
    build_job(w);
    web_server(w);
    backup(w);
    telemetry_exporter(w);
    maintenance(w);
    attack_stage(w);
  }

  SynthOutput out;
  out.event_count = events_.size();
  out.attack_event_count = attack_events_;

  std::ostringstream stream;
  for (const auto& e : events_) {
    const auto& subj = entities_.at(e.subject);
    const auto& obj = entities_.at(e.object);
    json line = {
        {"subject_uuid", subj.uuid},   {"object_uuid", obj.uuid},
        {"subject_kind", std::string(to_string(subj.kind))},
        {"object_kind", std::string(to_string(obj.kind))},
        {"event_type", std::string(to_string(e.kind))},
        {"timestamp_ns", e.ts},
        {"subject_attr", subj.attr},   {"object_attr", obj.attr},
    };
    stream << line.dump() << '\n';
  }
  out.stream_jsonl = stream.str();

  std::set<int> attack_windows(spec_.attack_windows.begin(), spec_.attack_windows.end());
  std::ostringstream labels;
  for (int w = 0; w < spec_.windows; ++w) {
    json line = {{"window_index", w},
                 {"label", attack_windows.count(w) ? "attack" : "benign"}};
    labels << line.dump() << '\n';
  }
  for (const auto& [uuid, entity] : entities_) {
    json line = {{"node_uuid", uuid}, {"label", entity.attack ? "attack" : "benign"}};
    labels << line.dump() << '\n';
    if (entity.attack) out.attack_node_uuids.push_back(uuid);
  }
  out.labels_jsonl = labels.str();
  return out;
}

}  // namespace

SynthOutput generate(const ScenarioSpec& spec) {
  spec.validate();
  Generator gen(spec);
  return gen.run();
}

}  // namespace driftwatch
