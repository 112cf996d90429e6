use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use seccmp::auction::{Auction, BidSubmission};
use seccmp::bench::run_bench;
use seccmp::protocols::{drive, run_comparison_with, ComparatorA, ComparatorB};
use seccmp::transport::{memory_pair, TcpEndpoint, Transport, PROTOCOL_VERSION};
use seccmp::{
    generate_keys, share_integer, validate_keys, ComparisonOutcome, Decryptor, Error, KeyFile, P2Schedule, Params,
    PartySession, PublicKey, SecretKey, SeededRng, SharedInteger, Variant,
};

/// Smallest modulus accepted without `--test-allow-tiny-keys`.
const MIN_SECURE_K: u32 = 1024;

#[derive(Parser, Debug)]
#[command(name = "seccmp", version, about = "Two-party comparison of secret-shared integers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a key pair and print its validation report.
    Keygen(KeygenArgs),
    /// Compare two plaintext integers by sharing them and running one protocol.
    Compare(CompareArgs),
    /// Time both protocols on the same random inputs.
    Bench(BenchArgs),
    /// Run a sealed-bid auction over a file of bids.
    Auction(AuctionArgs),
    /// Run one side of a comparison over TCP.
    Party(PartyArgs),
    /// Split an integer into the two share files used by `party`.
    Share(ShareArgs),
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[arg(long, default_value_t = 1024)]
    k: u32,
    #[arg(long, default_value_t = 160)]
    t: u32,
    #[arg(long, default_value_t = 16)]
    l: u32,
    /// Seed for deterministic generation; random if omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Key file to write (includes the secret key).
    #[arg(long)]
    out: PathBuf,
    /// Also write a public-only key file.
    #[arg(long)]
    public_out: Option<PathBuf>,
    /// Permit insecure parameters for testing.
    #[arg(long)]
    test_allow_tiny_keys: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Protocol {
    P1,
    P3,
}

impl From<Protocol> for Variant {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::P1 => Variant::P1,
            Protocol::P3 => Variant::P3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TransportKind {
    Mem,
    Tcp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Schedule {
    Batched,
    PerBit,
}

impl From<Schedule> for P2Schedule {
    fn from(s: Schedule) -> Self {
        match s {
            Schedule::Batched => P2Schedule::Batched,
            Schedule::PerBit => P2Schedule::PerBit,
        }
    }
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, value_enum, default_value = "p3")]
    protocol: Protocol,
    #[arg(long)]
    x: u64,
    #[arg(long)]
    y: u64,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "mem")]
    transport: TransportKind,
    /// Grouping of the share-product rounds (p1 only).
    #[arg(long, value_enum, default_value = "batched")]
    schedule: Schedule,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 1024)]
    k: u32,
    #[arg(long, default_value_t = 160)]
    t: u32,
    #[arg(long, default_value_t = 16)]
    l: u32,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use an existing key file instead of generating one.
    #[arg(long)]
    keys: Option<PathBuf>,
    /// Also write the machine-readable records to this file.
    #[arg(long)]
    machine_out: Option<PathBuf>,
    #[arg(long)]
    test_allow_tiny_keys: bool,
}

#[derive(Args, Debug)]
struct AuctionArgs {
    /// One decimal bid per line.
    #[arg(long)]
    bids: PathBuf,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RoleArg {
    A,
    B,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("endpoint").required(true).args(["listen", "connect"])))]
struct PartyArgs {
    #[arg(long, value_enum)]
    role: RoleArg,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    connect: Option<String>,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long)]
    x_shares: PathBuf,
    #[arg(long)]
    y_shares: PathBuf,
    #[arg(long, value_enum, default_value = "p3")]
    protocol: Protocol,
    #[arg(long, value_enum, default_value = "batched")]
    schedule: Schedule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give up after this many milliseconds without progress.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
    #[arg(long, hide = true, default_value_t = PROTOCOL_VERSION)]
    wire_version: u32,
}

#[derive(Args, Debug)]
struct ShareArgs {
    #[arg(long)]
    value: u64,
    #[arg(long)]
    keys: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_a: PathBuf,
    #[arg(long)]
    out_b: PathBuf,
}

/// Exit 1: bad input. Exit 2: the parties failed to complete.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Session(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_session_failure() {
            Failure::Session(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn load_keys(path: &Path) -> CliResult<(PublicKey, Option<SecretKey>)> {
    let file = KeyFile::from_json(&read_text(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let pk = file.public_key().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let sk = file.secret_key().map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok((pk, sk))
}

fn load_full_keys(path: &Path) -> CliResult<(PublicKey, SecretKey)> {
    match load_keys(path)? {
        (pk, Some(sk)) => Ok((pk, sk)),
        (_, None) => Err(usage(format!("{} holds no secret key", path.display()))),
    }
}

fn check_params(k: u32, t: u32, l: u32, allow_tiny: bool) -> CliResult<Params> {
    let params = Params::new(k, t, l)?;
    if allow_tiny {
        let min_k = Params::min_k(t, l);
        if k < min_k {
            eprintln!("note: k = {k} leaves no room for the prime cofactors; using k = {min_k}");
            return Ok(Params::new(min_k, t, l)?);
        }
        return Ok(params);
    }
    if k < MIN_SECURE_K {
        return Err(usage(format!("k = {k} is below {MIN_SECURE_K}; pass --test-allow-tiny-keys for test keys")));
    }
    params.check_room()?;
    Ok(params)
}

fn cmd_keygen(args: KeygenArgs) -> CliResult<()> {
    let params = check_params(args.k, args.t, args.l, args.test_allow_tiny_keys)?;
    let mut rng = match args.seed {
        Some(seed) => SeededRng::from_seed(seed),
        None => {
            let rng = SeededRng::from_entropy();
            eprintln!("seed: {}", rng.seed());
            rng
        }
    };
    let (pk, sk) = generate_keys(params, &mut rng)?;
    write_text(&args.out, &KeyFile::new(&pk, Some(&sk)).to_json())?;
    if let Some(path) = &args.public_out {
        write_text(path, &KeyFile::new(&pk, None).to_json())?;
    }
    let report = validate_keys(&pk, &sk);
    print!("{report}");
    println!("wrote {}", args.out.display());
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Session("generated key failed validation".into()))
    }
}

fn check_input(name: &str, v: u64, l: u32) -> CliResult<()> {
    if v >> l != 0 {
        return Err(usage(format!("{name} = {v} does not fit in l = {l} bits")));
    }
    Ok(())
}

fn sessions(
    pk: &Arc<PublicKey>,
    sk: &Arc<SecretKey>,
    variant: Variant,
    x: u64,
    y: u64,
    seed: u64,
) -> CliResult<(PartySession, PartySession)> {
    let l = pk.params().l;
    let u = pk.plain_modulus();
    let mut share_rng = SeededRng::with_stream(seed, 0);
    let (xa, xb) = share_integer(x, l, u, &mut share_rng)?;
    let (ya, yb) = share_integer(y, l, u, &mut share_rng)?;
    let decryptor = match variant {
        Variant::P1 => Some(Arc::new(Decryptor::for_key(pk, sk)?)),
        Variant::P3 => None,
    };
    let a = PartySession::party_a(pk.clone(), sk.clone(), decryptor, xa, ya, SeededRng::with_stream(seed, 1))?;
    let b = PartySession::party_b(pk.clone(), xb, yb, SeededRng::with_stream(seed, 2))?;
    Ok((a, b))
}

fn cmd_compare(args: CompareArgs) -> CliResult<()> {
    let (pk, sk) = load_full_keys(&args.keys)?;
    let l = pk.params().l;
    check_input("x", args.x, l)?;
    check_input("y", args.y, l)?;
    let (pk, sk) = (Arc::new(pk), Arc::new(sk));
    let variant = Variant::from(args.protocol);
    let schedule = P2Schedule::from(args.schedule);
    let (mut a, mut b) = sessions(&pk, &sk, variant, args.x, args.y, args.seed)?;

    let (outcome, frames) = match args.transport {
        TransportKind::Mem => {
            let (mut ep_a, mut ep_b) = memory_pair();
            let outcome = run_comparison_with(variant, schedule, &mut a, &mut b, &mut ep_a, &mut ep_b)?;
            (outcome, ep_a.transcript().sent().count() + ep_b.transcript().sent().count())
        }
        TransportKind::Tcp => {
            let timeout = Some(Duration::from_secs(60));
            let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| Failure::Session(e.to_string()))?;
            let addr = listener.local_addr().map_err(|e| Failure::Session(e.to_string()))?;
            let b_side = thread::spawn(move || -> seccmp::Result<(PartySession, usize)> {
                let mut ep = TcpEndpoint::accept(&listener, timeout)?;
                let mut party = ComparatorB::new(&mut b, variant, schedule)?;
                drive(&mut party, &mut ep, timeout)?;
                Ok((b, ep.transcript().sent().count()))
            });
            let mut ep = TcpEndpoint::connect(addr, timeout)?;
            let result_a = ComparatorA::new(&mut a, variant, schedule).and_then(|mut party| drive(&mut party, &mut ep, timeout));
            let sent_a = ep.transcript().sent().count();
            drop(ep);
            let (b_done, sent_b) = b_side.join().map_err(|_| Failure::Session("party B panicked".into()))??;
            b = b_done;
            (result_a?, sent_a + sent_b)
        }
    };
    println!("{outcome}");
    println!("party A: {}", a.counters());
    println!("party B: {}", b.counters());
    println!("frames: {frames}");
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CliResult<()> {
    let (pk, sk) = match &args.keys {
        Some(path) => load_full_keys(path)?,
        None => {
            let params = check_params(args.k, args.t, args.l, args.test_allow_tiny_keys)?;
            generate_keys(params, &mut SeededRng::with_stream(args.seed, u64::MAX))?
        }
    };
    if args.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let decryptor = Decryptor::for_key(&pk, &sk)?;
    let report = run_bench(Arc::new(pk), Arc::new(sk), Arc::new(decryptor), args.reps, args.seed)?;
    let machine = report.to_machine();
    print!("{}", report.to_table());
    println!();
    print!("{machine}");
    if let Some(path) = &args.machine_out {
        write_text(path, &machine)?;
    }
    Ok(())
}

fn parse_bids(text: &str, l: u32) -> CliResult<Vec<u64>> {
    let mut bids = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bid: u64 = line.parse().map_err(|_| usage(format!("line {}: {line:?} is not a decimal bid", idx + 1)))?;
        if bid >> l != 0 {
            return Err(usage(format!("line {}: bid {bid} does not fit in l = {l} bits", idx + 1)));
        }
        bids.push(bid);
    }
    Ok(bids)
}

fn cmd_auction(args: AuctionArgs) -> CliResult<()> {
    let (pk, sk) = load_full_keys(&args.keys)?;
    let l = pk.params().l;
    let bids = parse_bids(&read_text(&args.bids)?, l)?;
    let u = pk.plain_modulus();
    let mut auction = Auction::open(Arc::new(pk), Arc::new(sk), l, args.seed)?;
    let mut bidder_rng = SeededRng::with_stream(args.seed, u64::MAX);
    for (i, &value) in bids.iter().enumerate() {
        let bid = BidSubmission::from_value(format!("bidder-{}", i + 1), value, l, u, &mut bidder_rng)?;
        let outcome = auction.submit_bid(&bid)?;
        println!("round {}: {} {}", i + 1, bid.bidder_id, outcome);
    }
    let winning = auction.close()?;
    match auction.leader() {
        Some((round, bidder)) => println!("winner: {winning} ({bidder}, round {round})"),
        None => println!("winner: {winning} (no bid above the opening value)"),
    }
    Ok(())
}

fn read_shares(path: &Path, u: u64, l: u32) -> CliResult<SharedInteger> {
    let text = read_text(path)?;
    let mut residues = Vec::new();
    for (idx, line) in text.lines().enumerate().filter(|(_, s)| !s.trim().is_empty()) {
        let v: u64 = line
            .trim()
            .parse()
            .map_err(|_| usage(format!("{} line {}: {line:?} is not a residue", path.display(), idx + 1)))?;
        if v >= u {
            return Err(usage(format!("{} line {}: {v} is not below u = {u}", path.display(), idx + 1)));
        }
        residues.push(v);
    }
    if residues.len() != l as usize {
        return Err(usage(format!("{} has {} shares, expected l = {l}", path.display(), residues.len())));
    }
    Ok(SharedInteger::from_residues(&residues, u)?)
}

fn cmd_party(args: PartyArgs) -> CliResult<()> {
    let (pk, sk) = load_keys(&args.keys)?;
    let l = pk.params().l;
    let u = pk.plain_modulus();
    let x = read_shares(&args.x_shares, u, l)?;
    let y = read_shares(&args.y_shares, u, l)?;
    let variant = Variant::from(args.protocol);
    let schedule = P2Schedule::from(args.schedule);
    let timeout = Some(Duration::from_millis(args.timeout_ms));
    let pk = Arc::new(pk);

    let mut session = match args.role {
        RoleArg::A => {
            let sk = Arc::new(sk.ok_or_else(|| usage("party A needs a key file with the secret key"))?);
            let decryptor = match variant {
                Variant::P1 => Some(Arc::new(Decryptor::for_key(&pk, &sk)?)),
                Variant::P3 => None,
            };
            PartySession::party_a(pk, sk, decryptor, x, y, SeededRng::with_stream(args.seed, 1))?
        }
        RoleArg::B => PartySession::party_b(pk, x, y, SeededRng::with_stream(args.seed, 2))?,
    };

    let mut ep = match (&args.listen, &args.connect) {
        (Some(addr), _) => {
            let listener = TcpListener::bind(addr).map_err(|e| Failure::Session(format!("cannot listen on {addr}: {e}")))?;
            TcpEndpoint::accept_with_version(&listener, args.wire_version, timeout)?
        }
        (None, Some(addr)) => TcpEndpoint::connect_with_version(addr.as_str(), args.wire_version, timeout)?,
        (None, None) => unreachable!("clap requires one endpoint"),
    };
    let outcome: ComparisonOutcome = match args.role {
        RoleArg::A => drive(&mut ComparatorA::new(&mut session, variant, schedule)?, &mut ep, timeout)?,
        RoleArg::B => drive(&mut ComparatorB::new(&mut session, variant, schedule)?, &mut ep, timeout)?,
    };
    println!("{outcome}");
    println!("counters: {}", session.counters());
    Ok(())
}

fn cmd_share(args: ShareArgs) -> CliResult<()> {
    let (pk, _) = load_keys(&args.keys)?;
    let l = pk.params().l;
    check_input("value", args.value, l)?;
    let (a, b) = share_integer(args.value, l, pk.plain_modulus(), &mut SeededRng::from_seed(args.seed))?;
    let lines = |s: &SharedInteger| s.residues().iter().map(|v| format!("{v}\n")).collect::<String>();
    write_text(&args.out_a, &lines(&a))?;
    write_text(&args.out_b, &lines(&b))?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Keygen(args) => cmd_keygen(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Auction(args) => cmd_auction(args),
        Command::Party(args) => cmd_party(args),
        Command::Share(args) => cmd_share(args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Session(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
