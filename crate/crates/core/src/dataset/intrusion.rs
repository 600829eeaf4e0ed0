//! Synthetic connection records in the NSL-KDD column layout.
//!
//! Stand-in for the real KDD files when they are not available: 41 feature
//! columns, the raw attack name and a difficulty score, so the output goes
//! through exactly the same loading path as `KDDTrain+.txt`. Each attack
//! name is a mixture of traffic profiles; the class mix follows the public
//! training file (about 53% normal, 37% dos, 9% probe, 1% r2l, <0.1% u2r).
//!
//! Profiles overlap on purpose (guessing attacks look like failed normal
//! logins, slow scans look like ordinary rejected traffic), and `noise`
//! widens every profile, so the task is not linearly separable.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};

use crate::dataset::{Cell, RawRecord};
use crate::error::{HdcError, Result};
use crate::rng::{substream, Domain};

pub const INTRUSION_COLUMNS: [&str; 41] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// One traffic profile. Byte counts are log-normal `(mu, sigma)` in
/// natural-log bytes, with `None` meaning always zero; rates are centre
/// values in `[0, 1]` that get Gaussian jitter.
struct Profile {
    label: &'static str,
    weight: f64,
    protocol: &'static [(&'static str, f64)],
    service: &'static [(&'static str, f64)],
    flag: &'static [(&'static str, f64)],
    duration: Option<(f64, f64)>,
    src_bytes: Option<(f64, f64)>,
    dst_bytes: Option<(f64, f64)>,
    logged_in: f64,
    hot: f64,
    failed_logins: f64,
    compromised: f64,
    root_shell: f64,
    wrong_fragment: f64,
    guest: f64,
    count: (f64, f64),
    srv_count: (f64, f64),
    serror: f64,
    rerror: f64,
    same_srv: f64,
    diff_srv: f64,
    dst_host_count: (f64, f64),
    dst_host_srv_count: (f64, f64),
    dst_host_same_srv: f64,
    dst_host_diff_srv: f64,
    same_src_port: f64,
}

const TCP: &[(&str, f64)] = &[("tcp", 1.0)];
const UDP: &[(&str, f64)] = &[("udp", 1.0)];
const ICMP: &[(&str, f64)] = &[("icmp", 1.0)];
const SF: &[(&str, f64)] = &[("SF", 1.0)];

const BASE: Profile = Profile {
    label: "normal",
    weight: 0.0,
    protocol: TCP,
    service: &[("http", 1.0)],
    flag: SF,
    duration: None,
    src_bytes: None,
    dst_bytes: None,
    logged_in: 0.0,
    hot: 0.0,
    failed_logins: 0.0,
    compromised: 0.0,
    root_shell: 0.0,
    wrong_fragment: 0.0,
    guest: 0.0,
    count: (1.0, 10.0),
    srv_count: (1.0, 10.0),
    serror: 0.0,
    rerror: 0.0,
    same_srv: 1.0,
    diff_srv: 0.0,
    dst_host_count: (1.0, 255.0),
    dst_host_srv_count: (1.0, 255.0),
    dst_host_same_srv: 1.0,
    dst_host_diff_srv: 0.0,
    same_src_port: 0.0,
};

const PROFILES: &[Profile] = &[
    // normal traffic
    Profile {
        weight: 0.22,
        service: &[("http", 0.9), ("http_443", 0.1)],
        src_bytes: Some((5.4, 0.5)),
        dst_bytes: Some((7.6, 1.2)),
        logged_in: 0.98,
        count: (1.0, 20.0),
        srv_count: (1.0, 40.0),
        dst_host_count: (20.0, 255.0),
        dst_host_srv_count: (100.0, 255.0),
        ..BASE
    },
    Profile {
        weight: 0.06,
        service: &[("smtp", 1.0)],
        duration: Some((0.5, 1.0)),
        src_bytes: Some((7.0, 1.0)),
        dst_bytes: Some((5.8, 0.4)),
        logged_in: 0.95,
        dst_host_srv_count: (30.0, 200.0),
        dst_host_same_srv: 0.6,
        dst_host_diff_srv: 0.05,
        ..BASE
    },
    Profile {
        weight: 0.07,
        service: &[("ftp_data", 1.0)],
        src_bytes: Some((7.2, 1.8)),
        dst_bytes: None,
        logged_in: 0.8,
        count: (1.0, 15.0),
        srv_count: (1.0, 15.0),
        dst_host_srv_count: (5.0, 100.0),
        dst_host_same_srv: 0.5,
        dst_host_diff_srv: 0.05,
        same_src_port: 0.3,
        ..BASE
    },
    Profile {
        weight: 0.07,
        protocol: UDP,
        service: &[("domain_u", 0.7), ("private", 0.2), ("ntp_u", 0.1)],
        src_bytes: Some((3.8, 0.3)),
        dst_bytes: Some((4.3, 0.4)),
        count: (1.0, 120.0),
        srv_count: (1.0, 120.0),
        dst_host_same_srv: 0.8,
        dst_host_diff_srv: 0.02,
        ..BASE
    },
    Profile {
        weight: 0.04,
        protocol: ICMP,
        service: &[("ecr_i", 0.6), ("eco_i", 0.3), ("urp_i", 0.1)],
        src_bytes: Some((3.5, 0.6)),
        count: (1.0, 5.0),
        srv_count: (1.0, 5.0),
        dst_host_same_srv: 0.5,
        dst_host_diff_srv: 0.1,
        same_src_port: 0.6,
        ..BASE
    },
    Profile {
        weight: 0.03,
        service: &[("telnet", 0.4), ("ftp", 0.4), ("login", 0.2)],
        duration: Some((4.0, 2.0)),
        src_bytes: Some((5.0, 1.5)),
        dst_bytes: Some((7.0, 1.6)),
        logged_in: 0.9,
        hot: 0.4,
        failed_logins: 0.02,
        dst_host_srv_count: (1.0, 40.0),
        dst_host_same_srv: 0.3,
        dst_host_diff_srv: 0.05,
        ..BASE
    },
    Profile {
        weight: 0.03,
        service: &[("private", 0.4), ("other", 0.4), ("auth", 0.2)],
        flag: &[("REJ", 0.4), ("SF", 0.4), ("RSTO", 0.2)],
        src_bytes: Some((4.0, 1.5)),
        dst_bytes: Some((4.5, 2.0)),
        rerror: 0.35,
        same_srv: 0.6,
        diff_srv: 0.1,
        dst_host_same_srv: 0.2,
        dst_host_diff_srv: 0.1,
        ..BASE
    },
    // denial of service
    Profile {
        label: "neptune",
        weight: 0.27,
        service: &[("private", 0.5), ("other", 0.1), ("telnet", 0.1), ("ftp_data", 0.1), ("http", 0.1), ("finger", 0.1)],
        flag: &[("S0", 0.85), ("REJ", 0.15)],
        count: (100.0, 511.0),
        srv_count: (1.0, 30.0),
        serror: 0.95,
        same_srv: 0.05,
        diff_srv: 0.07,
        dst_host_count: (255.0, 255.0),
        dst_host_srv_count: (1.0, 30.0),
        dst_host_same_srv: 0.05,
        dst_host_diff_srv: 0.07,
        ..BASE
    },
    Profile {
        label: "smurf",
        weight: 0.035,
        protocol: ICMP,
        service: &[("ecr_i", 1.0)],
        src_bytes: Some((6.94, 0.05)),
        count: (300.0, 511.0),
        srv_count: (300.0, 511.0),
        dst_host_srv_count: (200.0, 255.0),
        same_src_port: 0.9,
        ..BASE
    },
    Profile {
        label: "back",
        weight: 0.02,
        service: &[("http", 1.0)],
        src_bytes: Some((10.2, 0.1)),
        dst_bytes: Some((9.0, 0.6)),
        logged_in: 1.0,
        hot: 2.0,
        compromised: 1.0,
        count: (1.0, 20.0),
        srv_count: (1.0, 20.0),
        dst_host_srv_count: (50.0, 255.0),
        ..BASE
    },
    Profile {
        label: "teardrop",
        weight: 0.02,
        protocol: UDP,
        service: &[("private", 1.0)],
        src_bytes: Some((3.3, 0.05)),
        wrong_fragment: 3.0,
        count: (1.0, 100.0),
        srv_count: (1.0, 100.0),
        dst_host_srv_count: (1.0, 100.0),
        ..BASE
    },
    Profile {
        label: "pod",
        weight: 0.01,
        protocol: ICMP,
        service: &[("ecr_i", 0.7), ("tim_i", 0.3)],
        src_bytes: Some((7.3, 0.05)),
        wrong_fragment: 1.0,
        ..BASE
    },
    // probing
    Profile {
        label: "satan",
        weight: 0.028,
        service: &[("private", 0.4), ("other", 0.3), ("finger", 0.1), ("telnet", 0.1), ("http", 0.1)],
        flag: &[("REJ", 0.6), ("SF", 0.2), ("S0", 0.1), ("RSTO", 0.1)],
        src_bytes: Some((2.0, 2.0)),
        count: (1.0, 200.0),
        srv_count: (1.0, 5.0),
        rerror: 0.6,
        serror: 0.05,
        same_srv: 0.1,
        diff_srv: 0.5,
        dst_host_count: (100.0, 255.0),
        dst_host_srv_count: (1.0, 20.0),
        dst_host_same_srv: 0.05,
        dst_host_diff_srv: 0.5,
        ..BASE
    },
    Profile {
        label: "ipsweep",
        weight: 0.029,
        protocol: ICMP,
        service: &[("eco_i", 0.9), ("ecr_i", 0.1)],
        src_bytes: Some((2.9, 0.3)),
        count: (1.0, 3.0),
        srv_count: (1.0, 40.0),
        dst_host_count: (1.0, 120.0),
        dst_host_srv_count: (1.0, 60.0),
        dst_host_same_srv: 0.9,
        same_src_port: 0.9,
        ..BASE
    },
    Profile {
        label: "portsweep",
        weight: 0.023,
        service: &[("private", 0.8), ("other", 0.2)],
        flag: &[("RSTR", 0.6), ("REJ", 0.3), ("SF", 0.1)],
        duration: Some((6.0, 2.0)),
        count: (1.0, 4.0),
        srv_count: (1.0, 4.0),
        rerror: 0.5,
        same_srv: 0.6,
        diff_srv: 0.2,
        dst_host_count: (1.0, 255.0),
        dst_host_srv_count: (1.0, 10.0),
        dst_host_same_srv: 0.1,
        dst_host_diff_srv: 0.3,
        same_src_port: 0.8,
        ..BASE
    },
    Profile {
        label: "nmap",
        weight: 0.012,
        protocol: &[("tcp", 0.5), ("udp", 0.2), ("icmp", 0.3)],
        service: &[("private", 0.6), ("eco_i", 0.2), ("other", 0.2)],
        flag: &[("SH", 0.5), ("SF", 0.3), ("S0", 0.2)],
        count: (1.0, 5.0),
        srv_count: (1.0, 5.0),
        serror: 0.3,
        dst_host_count: (1.0, 80.0),
        dst_host_srv_count: (1.0, 20.0),
        dst_host_same_srv: 0.4,
        dst_host_diff_srv: 0.3,
        same_src_port: 0.7,
        ..BASE
    },
    // remote to local
    Profile {
        label: "guess_passwd",
        weight: 0.0026,
        service: &[("telnet", 1.0)],
        flag: &[("SF", 0.5), ("RSTO", 0.5)],
        duration: Some((1.0, 0.5)),
        src_bytes: Some((4.8, 0.3)),
        dst_bytes: Some((4.9, 0.3)),
        logged_in: 0.05,
        failed_logins: 1.0,
        hot: 0.1,
        dst_host_srv_count: (1.0, 40.0),
        ..BASE
    },
    Profile {
        label: "warezclient",
        weight: 0.0036,
        service: &[("ftp_data", 0.7), ("ftp", 0.3)],
        duration: Some((5.0, 2.0)),
        src_bytes: Some((6.0, 1.5)),
        dst_bytes: Some((3.0, 2.0)),
        logged_in: 1.0,
        hot: 1.0,
        guest: 0.5,
        dst_host_srv_count: (1.0, 60.0),
        dst_host_same_srv: 0.6,
        same_src_port: 0.5,
        ..BASE
    },
    Profile {
        label: "warezmaster",
        weight: 0.0012,
        service: &[("ftp", 1.0)],
        duration: Some((6.5, 1.0)),
        src_bytes: Some((6.5, 1.0)),
        dst_bytes: Some((13.0, 1.0)),
        logged_in: 1.0,
        hot: 1.0,
        guest: 0.8,
        ..BASE
    },
    Profile {
        label: "imap",
        weight: 0.0008,
        service: &[("imap4", 1.0)],
        flag: &[("SF", 0.5), ("S3", 0.5)],
        src_bytes: Some((7.0, 2.0)),
        dst_bytes: Some((7.0, 2.0)),
        count: (1.0, 5.0),
        ..BASE
    },
    // user to root
    Profile {
        label: "buffer_overflow",
        weight: 0.0003,
        service: &[("telnet", 0.7), ("ftp_data", 0.3)],
        duration: Some((5.0, 1.5)),
        src_bytes: Some((7.0, 1.2)),
        dst_bytes: Some((8.0, 1.2)),
        logged_in: 1.0,
        hot: 1.5,
        compromised: 1.0,
        root_shell: 0.7,
        dst_host_srv_count: (1.0, 20.0),
        ..BASE
    },
    Profile {
        label: "rootkit",
        weight: 0.0001,
        service: &[("telnet", 0.5), ("ftp_data", 0.3), ("private", 0.2)],
        duration: Some((3.0, 2.0)),
        src_bytes: Some((6.0, 2.0)),
        dst_bytes: Some((6.0, 2.0)),
        logged_in: 0.8,
        hot: 1.0,
        root_shell: 0.3,
        ..BASE
    },
];

fn pick<'a, R: Rng>(rng: &mut R, options: &'a [(&'a str, f64)]) -> &'a str {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.random::<f64>() * total;
    for (name, w) in options {
        if u < *w {
            return name;
        }
        u -= w;
    }
    options[options.len() - 1].0
}

struct Sampler<'r> {
    rng: &'r mut ChaCha8Rng,
    noise: f64,
}

impl Sampler<'_> {
    fn rate(&mut self, centre: f64) -> f64 {
        let jitter = Normal::new(0.0, self.noise).expect("noise >= 0");
        let v: f64 = centre + jitter.sample(self.rng);
        (v.clamp(0.0, 1.0) * 100.0).round() / 100.0
    }

    fn bytes(&mut self, spec: Option<(f64, f64)>) -> f64 {
        match spec {
            None => 0.0,
            Some((mu, s)) => {
                let d = LogNormal::new(mu, s * (1.0 + self.noise)).expect("finite parameters");
                d.sample(self.rng).round()
            }
        }
    }

    fn range(&mut self, (lo, hi): (f64, f64), cap: f64) -> f64 {
        let span = hi - lo;
        let stretch = span * self.noise;
        let v = self.rng.random_range(lo - stretch..=hi + stretch);
        v.round().clamp(0.0, cap)
    }

    fn poisson(&mut self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        Poisson::new(lambda).expect("positive rate").sample(self.rng)
    }

    fn coin(&mut self, p: f64) -> f64 {
        if self.rng.random::<f64>() < p {
            1.0
        } else {
            0.0
        }
    }
}

fn record(profile: &Profile, s: &mut Sampler<'_>) -> RawRecord {
    let protocol = pick(s.rng, profile.protocol).to_string();
    let service = pick(s.rng, profile.service).to_string();
    let flag = pick(s.rng, profile.flag).to_string();
    let duration = match profile.duration {
        Some(spec) => s.bytes(Some(spec)),
        None => 0.0,
    };
    let serror = s.rate(profile.serror);
    let rerror = s.rate(profile.rerror);
    let same_srv = s.rate(profile.same_srv);
    let diff_srv = s.rate(profile.diff_srv);
    let dst_host_serror = s.rate(profile.serror);
    let dst_host_rerror = s.rate(profile.rerror);
    let root_shell = s.coin(profile.root_shell);
    let values = vec![
        Cell::Numeric(duration),
        Cell::Categorical(protocol),
        Cell::Categorical(service),
        Cell::Categorical(flag),
        Cell::Numeric(s.bytes(profile.src_bytes)),
        Cell::Numeric(s.bytes(profile.dst_bytes)),
        Cell::Numeric(0.0),
        Cell::Numeric(s.poisson(profile.wrong_fragment).min(3.0)),
        Cell::Numeric(0.0),
        Cell::Numeric(s.poisson(profile.hot)),
        Cell::Numeric(s.poisson(profile.failed_logins).min(5.0)),
        Cell::Numeric(s.coin(profile.logged_in)),
        Cell::Numeric(s.poisson(profile.compromised)),
        Cell::Numeric(root_shell),
        Cell::Numeric(0.0),
        Cell::Numeric(root_shell * s.poisson(1.0)),
        Cell::Numeric(s.poisson(profile.compromised * 0.5)),
        Cell::Numeric(0.0),
        Cell::Numeric(s.poisson(profile.hot * 0.1)),
        Cell::Numeric(0.0),
        Cell::Numeric(0.0),
        Cell::Numeric(s.coin(profile.guest)),
        Cell::Numeric(s.range(profile.count, 511.0)),
        Cell::Numeric(s.range(profile.srv_count, 511.0)),
        Cell::Numeric(serror),
        Cell::Numeric(s.rate(profile.serror)),
        Cell::Numeric(rerror),
        Cell::Numeric(s.rate(profile.rerror)),
        Cell::Numeric(same_srv),
        Cell::Numeric(diff_srv),
        Cell::Numeric(s.rate(profile.diff_srv * 0.5)),
        Cell::Numeric(s.range(profile.dst_host_count, 255.0)),
        Cell::Numeric(s.range(profile.dst_host_srv_count, 255.0)),
        Cell::Numeric(s.rate(profile.dst_host_same_srv)),
        Cell::Numeric(s.rate(profile.dst_host_diff_srv)),
        Cell::Numeric(s.rate(profile.same_src_port)),
        Cell::Numeric(s.rate(profile.diff_srv * 0.3)),
        Cell::Numeric(dst_host_serror),
        Cell::Numeric(s.rate(profile.serror)),
        Cell::Numeric(dst_host_rerror),
        Cell::Numeric(s.rate(profile.rerror)),
    ];
    RawRecord {
        values,
        label: profile.label.to_string(),
    }
}

/// `n` synthetic records; `noise` (≥ 0, typical 0.1 to 0.8) widens every
/// profile. Record `i` depends only on `(seed, i)`.
pub fn synth_intrusion(n: usize, noise: f64, seed: u64) -> Result<Vec<RawRecord>> {
    if n == 0 {
        return Err(HdcError::param("record count must be at least 1"));
    }
    if !(noise >= 0.0) || !noise.is_finite() {
        return Err(HdcError::param("noise must be a finite value >= 0"));
    }
    let total: f64 = PROFILES.iter().map(|p| p.weight).sum();
    Ok((0..n)
        .map(|i| {
            let mut rng = substream(seed, Domain::Synth, 1 << 32 | i as u64);
            let mut u = rng.random::<f64>() * total;
            let profile = PROFILES
                .iter()
                .find(|p| {
                    let hit = u < p.weight;
                    u -= p.weight;
                    hit
                })
                .unwrap_or(&PROFILES[0]);
            let mut sampler = Sampler { rng: &mut rng, noise };
            record(profile, &mut sampler)
        })
        .collect())
}
