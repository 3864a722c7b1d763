use std::collections::HashSet;
use std::fmt;

use super::TestkitError;
use crate::lang::{goal_to_string, read_terms, term_to_goal, term_to_string, Goal, SKind, STerm, Span, Term, TypeExpr};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    Succeed,
    Fail,
    Exception,
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Expectation::Succeed => "succeed",
            Expectation::Fail => "fail",
            Expectation::Exception => "exception",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cardinality {
    Var(String),
    Count(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Assertion {
    Expect(Expectation),
    True(Goal),
    SomeTrue(Goal),
    AllTrue(Goal),
    TrueNth(usize, Goal),
    Cardinality(Cardinality),
    Type(String, TypeExpr),
    Limit(usize),
}

impl Assertion {
    /// Whether the assertion needs more than the first solution.
    pub fn needs_enumeration(&self) -> bool {
        matches!(
            self,
            Assertion::SomeTrue(_) | Assertion::AllTrue(_) | Assertion::TrueNth(..) | Assertion::Cardinality(_)
        )
    }
}

fn type_to_term(t: &TypeExpr) -> Term {
    match t {
        TypeExpr::Var(v) => Term::var(v.clone()),
        TypeExpr::Con(n, ps) => Term::compound(n.clone(), ps.iter().map(type_to_term).collect()),
    }
}

impl fmt::Display for Assertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = |g: &Goal| goal_to_string(g, 0).replace('\n', " ");
        match self {
            Assertion::Expect(e) => write!(f, "{}", e),
            Assertion::True(c) => write!(f, "true({})", g(c)),
            Assertion::SomeTrue(c) => write!(f, "some_true({})", g(c)),
            Assertion::AllTrue(c) => write!(f, "all_true({})", g(c)),
            Assertion::TrueNth(n, c) => write!(f, "true({}, {})", n, g(c)),
            Assertion::Cardinality(Cardinality::Var(v)) => write!(f, "solutions_cardinality({})", v),
            Assertion::Cardinality(Cardinality::Count(n)) => write!(f, "solutions_cardinality({})", n),
            Assertion::Type(v, t) => write!(f, "type({}, {})", v, term_to_string(&type_to_term(t))),
            Assertion::Limit(n) => write!(f, "limit({})", n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestCase {
    pub name: String,
    pub code: Vec<Goal>,
    pub assertions: Vec<Assertion>,
    pub span: Span,
}

impl TestCase {
    pub fn expectation(&self) -> Expectation {
        self.assertions
            .iter()
            .find_map(|a| match a {
                Assertion::Expect(e) => Some(*e),
                _ => None,
            })
            .unwrap_or(Expectation::Succeed)
    }

    /// Solutions to enumerate: the explicit limit, else one unless some
    /// assertion looks past the first solution.
    pub fn limit(&self) -> Option<usize> {
        for a in &self.assertions {
            if let Assertion::Limit(n) = a {
                return Some(*n);
            }
        }
        if self.assertions.iter().any(Assertion::needs_enumeration) {
            None
        } else {
            Some(1)
        }
    }

    pub fn code_goal(&self) -> Goal {
        Goal::conj(self.code.clone(), self.span)
    }

    /// Variables of the code, in first-occurrence order.
    pub fn code_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        for g in &self.code {
            g.collect_vars(&mut out);
        }
        out
    }
}

fn bad(t: &STerm, msg: impl Into<String>) -> TestkitError {
    TestkitError::Suite {
        pos: t.span.start,
        message: msg.into(),
    }
}

fn count(t: &STerm, min: i64) -> Result<usize, TestkitError> {
    match t.kind {
        SKind::Int(n) if n >= min => Ok(n as usize),
        _ => Err(bad(t, format!("expected an integer of at least {}", min))),
    }
}

fn goal(t: &STerm) -> Result<Goal, TestkitError> {
    term_to_goal(t).map_err(|e| bad(t, e.to_string()))
}

fn assertion(t: &STerm) -> Result<Assertion, TestkitError> {
    let a = t.args();
    Ok(match t.functor() {
        Some(("succeed", 0)) => Assertion::Expect(Expectation::Succeed),
        Some(("fail", 0)) => Assertion::Expect(Expectation::Fail),
        Some(("exception", 0)) => Assertion::Expect(Expectation::Exception),
        Some(("true", 1)) => Assertion::True(goal(&a[0])?),
        Some(("some_true", 1)) => Assertion::SomeTrue(goal(&a[0])?),
        Some(("all_true", 1)) => Assertion::AllTrue(goal(&a[0])?),
        Some(("true", 2)) => Assertion::TrueNth(count(&a[0], 1)?, goal(&a[1])?),
        Some(("solutions_cardinality", 1)) => Assertion::Cardinality(match &a[0].kind {
            SKind::Var(v) => Cardinality::Var(v.clone()),
            _ => Cardinality::Count(count(&a[0], 0)?),
        }),
        Some(("type", 2)) => {
            let SKind::Var(v) = &a[0].kind else {
                return Err(bad(&a[0], "type/2 expects a variable"));
            };
            let ty = TypeExpr::from_term(&a[1].to_term()).ok_or_else(|| bad(&a[1], "malformed type"))?;
            Assertion::Type(v.clone(), ty)
        }
        Some(("limit", 1)) => Assertion::Limit(count(&a[0], 1)?),
        Some((name, arity)) => return Err(bad(t, format!("unknown assertion {}/{}", name, arity))),
        None => return Err(bad(t, "assertion expected")),
    })
}

fn test_case(t: &STerm) -> Result<TestCase, TestkitError> {
    if !t.is_functor("test", 3) {
        return Err(bad(t, "expected test(Name, [Goals], [Assertions])"));
    }
    let a = t.args();
    let name = match &a[0].kind {
        SKind::Compound(n, args) if args.is_empty() => n.clone(),
        SKind::Int(i) => i.to_string(),
        _ => return Err(bad(&a[0], "test name must be an atom")),
    };
    let code_items = a[1]
        .list_items()
        .ok_or_else(|| bad(&a[1], "code must be a list of goals"))?;
    if code_items.is_empty() {
        return Err(bad(&a[1], format!("test {}: empty code", name)));
    }
    let code = code_items.into_iter().map(goal).collect::<Result<Vec<_>, _>>()?;
    let items = a[2]
        .list_items()
        .ok_or_else(|| bad(&a[2], "assertions must be a list"))?;
    let mut assertions = Vec::new();
    let (mut limit, mut expect) = (false, None::<Expectation>);
    for item in items {
        let asn = assertion(item)?;
        match &asn {
            Assertion::Limit(_) if limit => return Err(bad(item, format!("test {}: duplicate limit", name))),
            Assertion::Limit(_) => limit = true,
            Assertion::Expect(e) => match expect {
                Some(prev) if prev != *e => {
                    return Err(bad(
                        item,
                        format!("test {}: conflicting expectations {} and {}", name, prev, e),
                    ))
                }
                _ => expect = Some(*e),
            },
            _ => {}
        }
        assertions.push(asn);
    }
    Ok(TestCase {
        name,
        code,
        assertions,
        span: t.span,
    })
}

/// Reads `test(Name, [Goals], [Assertions]).` terms.
pub fn parse_testsuite(text: &str) -> Result<Vec<TestCase>, TestkitError> {
    let terms = read_terms(text).map_err(|e| TestkitError::Suite {
        pos: e.pos,
        message: e.message,
    })?;
    let mut seen = HashSet::new();
    let mut cases = Vec::new();
    for t in &terms {
        let case = test_case(t)?;
        if !seen.insert(case.name.clone()) {
            return Err(bad(t, format!("duplicate test name {}", case.name)));
        }
        cases.push(case);
    }
    Ok(cases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_goal;

    fn same(a: &Goal, b: &str) -> bool {
        goal_to_string(a, 0) == goal_to_string(&parse_goal(b).unwrap(), 0)
    }

    #[test]
    fn single_true_assertion() {
        let cases = parse_testsuite("test(t1, [reverse([1,2],L)], [true(L=[2,1])]).").unwrap();
        assert_eq!(cases.len(), 1);
        let c = &cases[0];
        assert_eq!(c.name, "t1");
        assert!(same(&c.code[0], "reverse([1,2],L)"));
        let Assertion::True(cond) = &c.assertions[0] else {
            panic!()
        };
        assert!(same(cond, "L = [2,1]"));
        assert_eq!(c.limit(), Some(1));
        assert_eq!(c.expectation(), Expectation::Succeed);
    }

    #[test]
    fn cardinality_and_quantified_assertions() {
        let text = "test(t3, [member(X,[1,2,3,4])],\n    [solutions_cardinality(N),true(N>3),\n    all_true(X<5)]).";
        let c = &parse_testsuite(text).unwrap()[0];
        assert_eq!(c.assertions[0], Assertion::Cardinality(Cardinality::Var("N".into())));
        assert!(matches!(&c.assertions[1], Assertion::True(g) if same(g, "N > 3")));
        assert!(matches!(&c.assertions[2], Assertion::AllTrue(g) if same(g, "X < 5")));
        assert_eq!(c.limit(), None);
        assert_eq!(c.code_vars(), ["X"]);
    }

    #[test]
    fn other_keywords() {
        let text = "test(t4, [append(L1,L2,[1,2,3])], [type(L2,list(int)), true(2, L1 = [1]), limit(3), fail]).";
        let c = &parse_testsuite(text).unwrap()[0];
        assert_eq!(
            c.assertions[0],
            Assertion::Type("L2".into(), TypeExpr::list_of(TypeExpr::int()))
        );
        assert!(matches!(c.assertions[1], Assertion::TrueNth(2, _)));
        assert_eq!(c.limit(), Some(3));
        assert_eq!(c.expectation(), Expectation::Fail);
        assert_eq!(c.assertions[0].to_string(), "type(L2, list(int))");
    }

    #[test]
    fn malformed_suites_are_rejected() {
        let err = |s: &str| parse_testsuite(s).unwrap_err().to_string();
        assert!(err("test(x,[p],[limit(2),limit(3)]).").contains("duplicate limit"));
        assert!(err("test(x,[p],[frobnicate(X)]).").contains("unknown assertion frobnicate/1"));
        assert!(err("test(x,[p],[fail,exception]).").contains("conflicting expectations"));
        assert!(err("test(x,[p],[]).\ntest(x,[q],[]).").contains("duplicate test name x"));
        assert!(err("test(x,[],[]).").contains("empty code"));
        assert!(err("test(x,[p],[true(0, p)]).").contains("at least 1"));
        assert!(parse_testsuite("test(x,[p],[").is_err());
    }

    #[test]
    fn empty_suite() {
        assert!(parse_testsuite("% nothing\n").unwrap().is_empty());
    }
}
