//! Numeric SRP-3: registration, key establishment, key confirmation, and the
//! transcript a malicious server can fabricate from a stolen record.
//!
//! Group arithmetic is modulo the prime q and exponent arithmetic modulo
//! q - 1.  The hash is SHA-256 over length-prefixed fields, each call tagged
//! with a domain label.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::par::{self, Parallelism};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupParams {
    pub name: &'static str,
    pub q: BigUint,
    pub g: BigUint,
}

const RFC5054_1024: &str = "EEAF0AB9ADB38DD69C33F80AFA8FC5E86072618775FF3C0B9EA2314C9C256576\
D674DF7496EA81D3383B4813D692C6E0E0D5D8E250B98BE48E495C1D6089DAD1\
5DC7D7B46154D6B6CE8EF4AD69B15D4982559B297BCF1885C529F566660E57EC\
68EDBC3C05726CC02FD4CBF4976EAA9AFD5138FE8376435B9FC61D2FC0EB06E3";

pub const PROFILES: &[&str] = &["toy", "test", "rfc5054-1024"];

impl GroupParams {
    /// q = 23, g = 5.
    pub fn toy() -> GroupParams {
        GroupParams {
            name: "toy",
            q: BigUint::from(23u32),
            g: BigUint::from(5u32),
        }
    }

    /// The largest safe prime below 2^61, with primitive root 2.
    pub fn test() -> GroupParams {
        GroupParams {
            name: "test",
            q: BigUint::from(2_305_843_009_213_691_579u64),
            g: BigUint::from(2u32),
        }
    }

    /// The 1024-bit group of RFC 5054, appendix A.
    pub fn rfc5054_1024() -> GroupParams {
        GroupParams {
            name: "rfc5054-1024",
            q: BigUint::parse_bytes(RFC5054_1024.as_bytes(), 16).expect("valid hex"),
            g: BigUint::from(2u32),
        }
    }

    pub fn profile(name: &str) -> Result<GroupParams, SrpError> {
        match name {
            "toy" => Ok(GroupParams::toy()),
            "test" => Ok(GroupParams::test()),
            "rfc5054-1024" => Ok(GroupParams::rfc5054_1024()),
            _ => Err(SrpError::UnknownProfile(name.to_string())),
        }
    }

    fn order(&self) -> BigUint {
        &self.q - 1u32
    }

    fn pow(&self, base: &BigUint, e: &BigUint) -> BigUint {
        base.modpow(e, &self.q)
    }

    /// Uniform in [1, q - 1).
    fn exponent(&self, rng: &mut impl RngCore) -> BigUint {
        rng.gen_biguint_range(&BigUint::one(), &self.order())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SrpError {
    #[error("empty password")]
    EmptyPassword,
    #[error("exponent is zero modulo q - 1")]
    ZeroExponent,
    #[error("A is zero modulo q")]
    BadA,
    #[error("B is zero or equal to v modulo q")]
    BadB,
    #[error("u is zero modulo q - 1")]
    BadU,
    #[error("server rejected M1")]
    M1Mismatch,
    #[error("client rejected M2")]
    M2Mismatch,
    #[error("unknown group profile {0}")]
    UnknownProfile(String),
    #[error("transcript: {0}")]
    Transcript(String),
}

/// SHA-256 over a domain label and length-prefixed fields.
pub fn h(label: &str, fields: &[&[u8]]) -> [u8; 32] {
    let mut d = Sha256::new();
    for f in std::iter::once(label.as_bytes()).chain(fields.iter().copied()) {
        d.update((f.len() as u64).to_be_bytes());
        d.update(f);
    }
    d.finalize().into()
}

fn int(n: &BigUint) -> Vec<u8> {
    n.to_bytes_be()
}

/// x = H(s, P) mod (q - 1); a zero result is rehashed under a counter
/// label until nonzero.
pub fn derive_x(group: &GroupParams, salt: &[u8], password: &str) -> BigUint {
    let mut x = BigUint::from_bytes_be(&h("x", &[salt, password.as_bytes()])) % group.order();
    let mut round = 0u64;
    while x.is_zero() {
        round += 1;
        let r = round.to_be_bytes();
        x = BigUint::from_bytes_be(&h("x-rehash", &[&r, salt, password.as_bytes()])) % group.order();
    }
    x
}

/// v = g^x; rejects a zero exponent.
pub fn verifier(group: &GroupParams, x: &BigUint) -> Result<BigUint, SrpError> {
    if (x % group.order()).is_zero() {
        return Err(SrpError::ZeroExponent);
    }
    Ok(group.pow(&group.g, x))
}

/// What the server stores: no password, no x.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerRecord {
    pub client_id: String,
    pub salt: Vec<u8>,
    pub v: BigUint,
}

/// The client's long-term secrets.  Every read is counted.
#[derive(Debug)]
pub struct ClientSecrets {
    password: String,
    x: BigUint,
    reads: Arc<AtomicUsize>,
}

impl ClientSecrets {
    pub fn new(password: &str, x: BigUint) -> ClientSecrets {
        ClientSecrets {
            password: password.to_string(),
            x,
            reads: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn password(&self) -> &str {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.password
    }

    pub fn x(&self) -> &BigUint {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.x
    }

    /// Reads of the password, x, or a session's `a` so far.
    pub fn reads(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }
}

pub fn register(
    group: &GroupParams,
    client_id: &str,
    password: &str,
    rng: &mut impl RngCore,
) -> Result<(ServerRecord, ClientSecrets), SrpError> {
    if password.is_empty() {
        return Err(SrpError::EmptyPassword);
    }
    let mut salt = vec![0u8; 16];
    rng.fill_bytes(&mut salt);
    let x = derive_x(group, &salt, password);
    let v = verifier(group, &x)?;
    let record = ServerRecord {
        client_id: client_id.to_string(),
        salt,
        v,
    };
    Ok((record, ClientSecrets::new(password, x)))
}

/// Key material shared by both sides once Phase I is done.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKey(pub [u8; 32]);

fn key_from(group_elem: &BigUint) -> SessionKey {
    SessionKey(h("K", &[&int(group_elem)]))
}

fn m1(a_pub: &BigUint, b_pub: &BigUint, k: &SessionKey) -> [u8; 32] {
    h("M1", &[&int(a_pub), &int(b_pub), &k.0])
}

fn m2(a_pub: &BigUint, m1: &[u8; 32], k: &SessionKey) -> [u8; 32] {
    h("M2", &[&int(a_pub), m1, &k.0])
}

pub struct ClientSession<'a> {
    group: GroupParams,
    secrets: &'a ClientSecrets,
    a: BigUint,
    pub a_pub: BigUint,
    key: Option<(BigUint, SessionKey, [u8; 32])>,
}

impl<'a> ClientSession<'a> {
    pub fn start(group: &GroupParams, secrets: &'a ClientSecrets, rng: &mut impl RngCore) -> ClientSession<'a> {
        ClientSession::with_a(group, secrets, group.exponent(rng))
    }

    pub fn with_a(group: &GroupParams, secrets: &'a ClientSecrets, a: BigUint) -> ClientSession<'a> {
        let a_pub = group.pow(&group.g, &a);
        ClientSession {
            group: group.clone(),
            secrets,
            a,
            a_pub,
            key: None,
        }
    }

    fn a(&self) -> &BigUint {
        self.secrets.reads.fetch_add(1, Ordering::SeqCst);
        &self.a
    }

    /// K = H(((B - v) mod q)^(a + u x)), with v recomputed from x.  Returns
    /// M1.
    pub fn phase1(&mut self, b_pub: &BigUint, u: &BigUint) -> Result<[u8; 32], SrpError> {
        let g = &self.group;
        let q = &g.q;
        if (b_pub % q).is_zero() {
            return Err(SrpError::BadB);
        }
        if (u % g.order()).is_zero() {
            return Err(SrpError::BadU);
        }
        let x = self.secrets.x().clone();
        let v = g.pow(&g.g, &x);
        let base = (b_pub % q + q - &v) % q;
        if base.is_zero() {
            return Err(SrpError::BadB);
        }
        let e = (self.a() + u * &x) % g.order();
        let s = g.pow(&base, &e);
        let k = key_from(&s);
        let proof = m1(&self.a_pub, b_pub, &k);
        self.key = Some((s, k, proof));
        Ok(proof)
    }

    pub fn key(&self) -> Option<&SessionKey> {
        self.key.as_ref().map(|(_, k, _)| k)
    }

    pub fn premaster(&self) -> Option<&BigUint> {
        self.key.as_ref().map(|(s, _, _)| s)
    }

    pub fn verify_m2(&self, proof: &[u8; 32]) -> Result<(), SrpError> {
        let (_, k, own_m1) = self.key.as_ref().ok_or(SrpError::M2Mismatch)?;
        if m2(&self.a_pub, own_m1, k) == *proof {
            Ok(())
        } else {
            Err(SrpError::M2Mismatch)
        }
    }
}

pub struct ServerSession {
    group: GroupParams,
    pub a_pub: BigUint,
    pub b_pub: BigUint,
    pub u: BigUint,
    premaster: BigUint,
    key: SessionKey,
}

impl ServerSession {
    /// Draws b and u (u nonzero, b != u) and computes B = v + g^b and
    /// K = H((A v^u)^b).
    pub fn start(group: &GroupParams, record: &ServerRecord, a_pub: &BigUint, rng: &mut impl RngCore) -> Result<(ServerSession, BigUint), SrpError> {
        loop {
            let b = group.exponent(rng);
            let u = group.exponent(rng);
            if b == u {
                continue;
            }
            match ServerSession::with_bu(group, record, a_pub, &b, &u) {
                Err(SrpError::BadB) => continue,
                r => return r.map(|s| (s, b)),
            }
        }
    }

    pub fn with_bu(group: &GroupParams, record: &ServerRecord, a_pub: &BigUint, b: &BigUint, u: &BigUint) -> Result<ServerSession, SrpError> {
        let q = &group.q;
        if (a_pub % q).is_zero() {
            return Err(SrpError::BadA);
        }
        if (u % group.order()).is_zero() {
            return Err(SrpError::BadU);
        }
        let b_pub = (&record.v + group.pow(&group.g, b)) % q;
        if b_pub.is_zero() {
            return Err(SrpError::BadB);
        }
        let premaster = group.pow(&(a_pub * group.pow(&record.v, u) % q), b);
        let key = key_from(&premaster);
        Ok(ServerSession {
            group: group.clone(),
            a_pub: a_pub.clone(),
            b_pub,
            u: u.clone(),
            premaster,
            key,
        })
    }

    pub fn key(&self) -> &SessionKey {
        &self.key
    }

    pub fn premaster(&self) -> &BigUint {
        &self.premaster
    }

    pub fn group(&self) -> &GroupParams {
        &self.group
    }

    /// Checks M1 and answers with M2.
    pub fn verify_m1(&self, proof: &[u8; 32]) -> Result<[u8; 32], SrpError> {
        if m1(&self.a_pub, &self.b_pub, &self.key) != *proof {
            return Err(SrpError::M1Mismatch);
        }
        Ok(m2(&self.a_pub, proof, &self.key))
    }
}

/// The wire messages of one session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub client_id: String,
    pub salt: Vec<u8>,
    pub a_pub: BigUint,
    pub b_pub: BigUint,
    pub u: BigUint,
    pub m1: [u8; 32],
    pub m2: [u8; 32],
}

fn hex_int(n: &BigUint) -> String {
    format!("{n:x}")
}

impl fmt::Display for Transcript {
    /// One field per line: I, s, A, B and u, M1, M2, all hex.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "I {}", hex::encode(self.client_id.as_bytes()))?;
        writeln!(f, "s {}", hex::encode(&self.salt))?;
        writeln!(f, "A {}", hex_int(&self.a_pub))?;
        writeln!(f, "B {} {}", hex_int(&self.b_pub), hex_int(&self.u))?;
        writeln!(f, "M1 {}", hex::encode(self.m1))?;
        writeln!(f, "M2 {}", hex::encode(self.m2))
    }
}

impl std::str::FromStr for Transcript {
    type Err = SrpError;

    fn from_str(text: &str) -> Result<Transcript, SrpError> {
        let bad = |m: &str| SrpError::Transcript(m.to_string());
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut field = |tag: &str| -> Result<Vec<String>, SrpError> {
            let l = lines.next().ok_or_else(|| bad(&format!("missing {tag}")))?;
            let mut ws = l.split_whitespace();
            if ws.next() != Some(tag) {
                return Err(bad(&format!("expected {tag} line")));
            }
            Ok(ws.map(str::to_string).collect())
        };
        let bytes = |s: &str| hex::decode(s).map_err(|e| bad(&e.to_string()));
        let num = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).ok_or_else(|| bad("bad hex integer"));
        let one = |v: Vec<String>, tag: &str| -> Result<String, SrpError> {
            match <[String; 1]>::try_from(v) {
                Ok([s]) => Ok(s),
                Err(_) => Err(bad(&format!("{tag} takes one field"))),
            }
        };
        let hash = |s: &str| -> Result<[u8; 32], SrpError> {
            bytes(s)?.try_into().map_err(|_| bad("hash is not 32 bytes"))
        };
        let id = bytes(&one(field("I")?, "I")?)?;
        let salt = bytes(&one(field("s")?, "s")?)?;
        let a_pub = num(&one(field("A")?, "A")?)?;
        let bu = field("B")?;
        let [b, u] = <[String; 2]>::try_from(bu).map_err(|_| bad("B takes two fields"))?;
        let m1 = hash(&one(field("M1")?, "M1")?)?;
        let m2 = hash(&one(field("M2")?, "M2")?)?;
        Ok(Transcript {
            client_id: String::from_utf8(id).map_err(|_| bad("I is not UTF-8"))?,
            salt,
            a_pub,
            b_pub: num(&b)?,
            u: num(&u)?,
            m1,
            m2,
        })
    }
}

/// Where a test run corrupts a message in flight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tamper {
    #[default]
    None,
    /// Flip bit `n` of A.
    A(u64),
    B(u64),
    M1(u64),
    M2(u64),
}

fn flip_int(n: &BigUint, bit: u64) -> BigUint {
    n ^ (BigUint::one() << bit)
}

fn flip_hash(m: &[u8; 32], bit: u64) -> [u8; 32] {
    let mut m = *m;
    m[(bit / 8 % 32) as usize] ^= 1 << (bit % 8);
    m
}

#[derive(Debug, Clone)]
pub struct Handshake {
    pub transcript: Transcript,
    pub client_key: Option<SessionKey>,
    pub server_key: SessionKey,
    pub verdict: Result<(), SrpError>,
}

/// One full session between an honest client and server.
pub fn handshake(
    group: &GroupParams,
    record: &ServerRecord,
    secrets: &ClientSecrets,
    tamper: Tamper,
    rng: &mut impl RngCore,
) -> Result<Handshake, SrpError> {
    let mut client = ClientSession::start(group, secrets, rng);
    let a_sent = match tamper {
        Tamper::A(bit) => flip_int(&client.a_pub, bit),
        _ => client.a_pub.clone(),
    };
    let (server, _) = ServerSession::start(group, record, &a_sent, rng)?;
    let b_sent = match tamper {
        Tamper::B(bit) => flip_int(&server.b_pub, bit),
        _ => server.b_pub.clone(),
    };
    let mut transcript = Transcript {
        client_id: record.client_id.clone(),
        salt: record.salt.clone(),
        a_pub: a_sent,
        b_pub: b_sent.clone(),
        u: server.u.clone(),
        m1: [0; 32],
        m2: [0; 32],
    };
    let proof = match client.phase1(&b_sent, &server.u) {
        Ok(p) => p,
        Err(e) => {
            return Ok(Handshake {
                transcript,
                client_key: None,
                server_key: server.key().clone(),
                verdict: Err(e),
            })
        }
    };
    let proof = match tamper {
        Tamper::M1(bit) => flip_hash(&proof, bit),
        _ => proof,
    };
    transcript.m1 = proof;
    let verdict = server.verify_m1(&proof).and_then(|answer| {
        let answer = match tamper {
            Tamper::M2(bit) => flip_hash(&answer, bit),
            _ => answer,
        };
        transcript.m2 = answer;
        client.verify_m2(&answer)
    });
    Ok(Handshake {
        transcript,
        client_key: client.key().cloned(),
        server_key: server.key().clone(),
        verdict,
    })
}

/// A session fabricated by whoever holds the server's record.
#[derive(Debug, Clone)]
pub struct MaliciousRun {
    pub transcript: Transcript,
    /// The server exponent used, so verifiers can replay the session.
    pub b: BigUint,
    pub client_absent: bool,
}

/// Plays both sides from the record alone: picks a, b and u, and computes
/// the key the server way for both.
pub fn malicious_transcript(group: &GroupParams, record: &ServerRecord, rng: &mut impl RngCore) -> Result<MaliciousRun, SrpError> {
    let a = group.exponent(rng);
    let a_pub = group.pow(&group.g, &a);
    let (server, b) = ServerSession::start(group, record, &a_pub, rng)?;
    let k = server.key();
    let proof = m1(&a_pub, &server.b_pub, k);
    let answer = m2(&a_pub, &proof, k);
    Ok(MaliciousRun {
        transcript: Transcript {
            client_id: record.client_id.clone(),
            salt: record.salt.clone(),
            a_pub,
            b_pub: server.b_pub.clone(),
            u: server.u.clone(),
            m1: proof,
            m2: answer,
        },
        b,
        client_absent: true,
    })
}

/// Replays a transcript through an honest server holding `record` and
/// exponent `b`, then checks M2 the way a client would given that key.
pub fn verify_transcript(group: &GroupParams, record: &ServerRecord, t: &Transcript, b: &BigUint) -> Result<(), SrpError> {
    let server = ServerSession::with_bu(group, record, &t.a_pub, b, &t.u)?;
    if server.b_pub != t.b_pub {
        return Err(SrpError::BadB);
    }
    let answer = server.verify_m1(&t.m1)?;
    if answer != t.m2 {
        return Err(SrpError::M2Mismatch);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrialSummary {
    pub runs: usize,
    pub accepted: usize,
    pub keys_equal: usize,
    pub b_eq_u: usize,
    pub secret_reads: usize,
}

fn trial_rng(seed: u64, i: usize) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn password(rng: &mut impl RngCore) -> String {
    let n = rng.gen_range(1..24);
    (0..n).map(|_| rng.gen_range(b'!'..=b'~') as char).collect()
}

/// `runs` honest sessions with random passwords, each seeded from `seed`
/// and its index.
pub fn handshake_trials(group: &GroupParams, runs: usize, seed: u64, mode: Parallelism) -> TrialSummary {
    let results = par::map_range(mode, runs, |i| {
        let mut rng = trial_rng(seed, i);
        let pw = password(&mut rng);
        let (record, secrets) = register(group, "client", &pw, &mut rng).expect("nonempty password");
        let hs = handshake(group, &record, &secrets, Tamper::None, &mut rng).expect("honest run");
        (hs.verdict.is_ok(), hs.client_key.as_ref() == Some(&hs.server_key))
    });
    TrialSummary {
        runs,
        accepted: results.iter().filter(|r| r.0).count(),
        keys_equal: results.iter().filter(|r| r.1).count(),
        b_eq_u: 0,
        secret_reads: 0,
    }
}

/// `runs` fabricated sessions, each verified by an honest server; counts
/// reads of the client's secrets made while fabricating.
pub fn malicious_trials(group: &GroupParams, runs: usize, seed: u64, mode: Parallelism) -> TrialSummary {
    let results = par::map_range(mode, runs, |i| {
        let mut rng = trial_rng(seed, i);
        let pw = password(&mut rng);
        let (record, secrets) = register(group, "client", &pw, &mut rng).expect("nonempty password");
        let before = secrets.reads();
        let run = malicious_transcript(group, &record, &mut rng).expect("valid record");
        let reads = secrets.reads() - before;
        let ok = run.client_absent && verify_transcript(group, &record, &run.transcript, &run.b).is_ok();
        (ok, reads, run.b == run.transcript.u)
    });
    TrialSummary {
        runs,
        accepted: results.iter().filter(|r| r.0).count(),
        keys_equal: 0,
        b_eq_u: results.iter().filter(|r| r.2).count(),
        secret_reads: results.iter().map(|r| r.1).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn modpow(mut b: u64, mut e: u64, m: u64) -> u64 {
        let mut r = 1;
        b %= m;
        while e > 0 {
            if e & 1 == 1 {
                r = r * b % m;
            }
            b = b * b % m;
            e >>= 1;
        }
        r
    }

    fn n(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn toy_verifier() {
        let g = GroupParams::toy();
        // 5^6 mod 23, by repeated multiplication.
        let mut v = 1u64;
        for _ in 0..6 {
            v = v * 5 % 23;
        }
        assert_eq!(v, 8);
        assert_eq!(verifier(&g, &n(6)).unwrap(), n(v));
        assert_eq!(verifier(&g, &n(0)), Err(SrpError::ZeroExponent));
        assert_eq!(verifier(&g, &n(22)), Err(SrpError::ZeroExponent));
    }

    #[test]
    fn derived_x_is_nonzero_and_deterministic() {
        let g = GroupParams::toy();
        for i in 0..500u32 {
            let salt = i.to_be_bytes();
            let x = derive_x(&g, &salt, "pw");
            assert!(!x.is_zero() && x < n(22));
            assert_eq!(x, derive_x(&g, &salt, "pw"));
        }
    }

    #[test]
    fn empty_password_rejected() {
        let g = GroupParams::toy();
        assert!(matches!(register(&g, "c", "", &mut rng(0)), Err(SrpError::EmptyPassword)));
    }

    #[test]
    fn profiles_resolve() {
        for p in PROFILES {
            let g = GroupParams::profile(p).unwrap();
            assert_eq!(g.name, *p);
        }
        assert_eq!(GroupParams::rfc5054_1024().q.bits(), 1024);
        assert!(GroupParams::profile("nope").is_err());
    }

    #[test]
    fn toy_worked_example_keys_agree() {
        let g = GroupParams::toy();
        let (x, a, b, u) = (6u64, 3u64, 4u64, 2u64);
        let v = modpow(5, x, 23);
        let secrets = ClientSecrets::new("pw", n(x));
        let record = ServerRecord {
            client_id: "c".into(),
            salt: vec![1],
            v: n(v),
        };
        let mut client = ClientSession::with_a(&g, &secrets, n(a));
        let server = ServerSession::with_bu(&g, &record, &client.a_pub, &n(b), &n(u)).unwrap();
        // Closed forms: ((B - v) mod q)^(a + ux) and (A v^u)^b.
        let big_b = (v + modpow(5, b, 23)) % 23;
        let big_a = modpow(5, a, 23);
        let client_side = modpow((big_b + 23 - v) % 23, (a + u * x) % 22, 23);
        let server_side = modpow(big_a * modpow(v, u, 23) % 23, b, 23);
        assert_eq!(client_side, server_side);
        assert_eq!(server.b_pub, n(big_b));
        let proof = client.phase1(&server.b_pub, &server.u).unwrap();
        assert_eq!(client.premaster(), Some(&n(client_side)));
        assert_eq!(server.premaster(), &n(server_side));
        assert_eq!(client.key(), Some(server.key()));
        let answer = server.verify_m1(&proof).unwrap();
        client.verify_m2(&answer).unwrap();
    }

    #[test]
    fn equal_exponents_still_agree() {
        let g = GroupParams::toy();
        let secrets = ClientSecrets::new("pw", n(6));
        let record = ServerRecord {
            client_id: "c".into(),
            salt: vec![],
            v: n(8),
        };
        let mut client = ClientSession::with_a(&g, &secrets, n(4));
        let server = ServerSession::with_bu(&g, &record, &client.a_pub, &n(4), &n(2)).unwrap();
        client.phase1(&server.b_pub, &server.u).unwrap();
        assert_eq!(client.key(), Some(server.key()));
    }

    #[test]
    fn tampered_b_caught_at_m1() {
        let g = GroupParams::test();
        let mut r = rng(7);
        let (record, secrets) = register(&g, "c", "hunter2", &mut r).unwrap();
        let mut client = ClientSession::start(&g, &secrets, &mut r);
        let (server, _) = ServerSession::start(&g, &record, &client.a_pub, &mut r).unwrap();
        let proof = client.phase1(&(&server.b_pub + 1u32), &server.u).unwrap();
        assert_ne!(client.key(), Some(server.key()));
        assert_eq!(server.verify_m1(&proof), Err(SrpError::M1Mismatch));
    }

    #[test]
    fn wrong_verifier_rejected_at_m1() {
        let g = GroupParams::test();
        let mut r = rng(8);
        let (mut record, secrets) = register(&g, "c", "pw", &mut r).unwrap();
        record.v = verifier(&g, &derive_x(&g, &record.salt, "other")).unwrap();
        let hs = handshake(&g, &record, &secrets, Tamper::None, &mut r).unwrap();
        assert_eq!(hs.verdict, Err(SrpError::M1Mismatch));
    }

    #[test]
    fn stale_m1_rejected() {
        let g = GroupParams::test();
        let mut r = rng(9);
        let (record, secrets) = register(&g, "c", "pw", &mut r).unwrap();
        let first = handshake(&g, &record, &secrets, Tamper::None, &mut r).unwrap();
        assert!(first.verdict.is_ok());
        let a_pub = first.transcript.a_pub.clone();
        let (second, _) = ServerSession::start(&g, &record, &a_pub, &mut r).unwrap();
        assert_ne!(second.key(), &first.server_key);
        assert_eq!(second.verify_m1(&first.transcript.m1), Err(SrpError::M1Mismatch));
    }

    #[test]
    fn tamper_any_field_is_rejected() {
        let g = GroupParams::test();
        let bits = g.q.bits() - 1;
        let mut rejected = 0;
        let trials = 1000;
        for i in 0..trials {
            let mut r = rng(1000 + i);
            let (record, secrets) = register(&g, "c", "pw", &mut r).unwrap();
            let t = match i % 4 {
                0 => Tamper::A(r.gen_range(0..bits)),
                1 => Tamper::B(r.gen_range(0..bits)),
                2 => Tamper::M1(r.gen_range(0..256)),
                _ => Tamper::M2(r.gen_range(0..256)),
            };
            let hs = handshake(&g, &record, &secrets, t, &mut r).unwrap();
            if hs.verdict.is_err() {
                rejected += 1;
            }
        }
        assert!(rejected >= 999, "{rejected}");
    }

    #[test]
    fn server_never_picks_u_equal_to_b() {
        let g = GroupParams::toy();
        let record = ServerRecord {
            client_id: "c".into(),
            salt: vec![],
            v: n(8),
        };
        for i in 0..500 {
            let (s, b) = ServerSession::start(&g, &record, &n(10), &mut rng(i)).unwrap();
            assert_ne!(s.u, b);
            assert!(!s.u.is_zero() && !s.b_pub.is_zero());
        }
    }

    #[test]
    fn toy_malicious_transcript_accepted() {
        let g = GroupParams::toy();
        let record = ServerRecord {
            client_id: "c".into(),
            salt: vec![0xab],
            v: n(8),
        };
        let run = malicious_transcript(&g, &record, &mut rng(3)).unwrap();
        assert!(run.client_absent);
        verify_transcript(&g, &record, &run.transcript, &run.b).unwrap();
    }

    #[test]
    fn malicious_transcript_reads_no_client_secret() {
        let g = GroupParams::rfc5054_1024();
        let mut r = rng(4);
        let (record, secrets) = register(&g, "c", "correct horse", &mut r).unwrap();
        let run = malicious_transcript(&g, &record, &mut r).unwrap();
        assert_eq!(secrets.reads(), 0);
        verify_transcript(&g, &record, &run.transcript, &run.b).unwrap();
        // An honest handshake does read them.
        handshake(&g, &record, &secrets, Tamper::None, &mut r).unwrap();
        assert!(secrets.reads() > 0);
    }

    #[test]
    fn transcript_round_trips_through_text() {
        let g = GroupParams::test();
        let mut r = rng(5);
        let (record, secrets) = register(&g, "alice", "pw", &mut r).unwrap();
        let hs = handshake(&g, &record, &secrets, Tamper::None, &mut r).unwrap();
        let text = hs.transcript.to_string();
        let tags: Vec<&str> = text.lines().map(|l| l.split(' ').next().unwrap()).collect();
        assert_eq!(tags, ["I", "s", "A", "B", "M1", "M2"]);
        assert!(text.starts_with("I 616c696365\n"));
        let back: Transcript = text.parse().unwrap();
        assert_eq!(back, hs.transcript);
        assert!("I 00\ns 00\n".parse::<Transcript>().is_err());
    }

    #[test]
    fn hash_fields_are_length_prefixed() {
        assert_ne!(h("t", &[b"ab", b"c"]), h("t", &[b"a", b"bc"]));
        assert_ne!(h("t", &[b"x"]), h("u", &[b"x"]));
    }

    #[test]
    fn trial_batches_match_across_modes() {
        let g = GroupParams::test();
        let a = handshake_trials(&g, 50, 1, Parallelism::Sequential);
        let b = handshake_trials(&g, 50, 1, Parallelism::Parallel);
        assert_eq!(a, b);
        assert_eq!(a.accepted, 50);
        assert_eq!(a.keys_equal, 50);
        let m = malicious_trials(&g, 50, 2, Parallelism::Parallel);
        assert_eq!((m.accepted, m.secret_reads, m.b_eq_u), (50, 0, 0));
    }
}
