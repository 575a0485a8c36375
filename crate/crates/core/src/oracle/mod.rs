//! Reference semantics: the derivation, matching and linking rules written
//! as one stratified datalog program, evaluated naively over the asserted
//! facts and compared against the engine.
//!
//! Rule groups: `t` typing, `e` next/first/last subevents, `ev` event kinds,
//! `i` IO relations, `m` main classes, `lc` confidence lattice, `ma`
//! instance matching, `sma` spatial matching, `tcsub` subevent closure, `j`
//! joins, `n` possible next events. `aux` statements support the groups;
//! `lit` is the literal reading of the default output location rule, kept
//! for reporting.

pub mod check;
pub mod eval;
pub mod syntax;

pub use check::{differential_check, fact_base, DiffReport, FamilyDiff};
pub use eval::{evaluate, GroundAtom, Model, Program};

use crate::error::Result;

/// The rule program. Facts are the `has(S, slot, V)` atoms of the store.
pub const PROGRAM: &str = r#"
% Typing: event and entity evidence, class nodes, precedence.
t1: ev_cand(E) :- has(E, instance_of, event).
t2: ent_cand(E) :- has(E, instance_of, entity).
t3: ev_cand(E) :- has(E, S, X), participant_slot(S).
t4: ev_cand(E) :- has(X, S, E), ordering_slot(S).
t5: ev_cand(E) :- has(E, instance_of, C), has(C, ancestorclass, event).
t6: has(A, ancestorclass, B) :- has(A, superclass, B).
t7: has(A, ancestorclass, C) :- has(A, superclass, B), has(B, ancestorclass, C).
t8: ev_cand(E) :- has(E, S, X), ordering_slot(S).
t9: ev_cand(E) :- has(X, S, E), locational_slot(S).
t10: ev_cand(E) :- has(E, subevent, X).
t11: ev_cand(E) :- has(X, subevent, E).
t12: ev_cand(E) :- has(E, first_subevent, X).
t13: ev_cand(E) :- has(X, first_subevent, E).
t14: ent_cand(E) :- has(E, instance_of, C), has(C, ancestorclass, entity).
t15: ent_cand(E) :- has(X, S, E), participant_slot(S).
t16: class_node(C) :- has(X, instance_of, C).
t17: class_node(C) :- has(C, superclass, X).
t18: class_node(C) :- has(X, superclass, C).
t19: event(E) :- ev_cand(E), not class_node(E).
t20: entity(E) :- ent_cand(E), not ev_cand(E), not class_node(E).
t21: has_class(X, C) :- has(X, instance_of, C).
aux1: has_class(X, event) :- event(X).
aux2: has_class(X, entity) :- entity(X).
aux3: participant_slot(raw_material; result; agent; destination; instrument; origin; site; base; object).
aux4: ordering_slot(next_event; enables; causes; prevents; inhibits).
aux5: locational_slot(happenings).

% Next events; first and last subevents have no sibling before or after them.
e1: next_source(enables; causes; prevents; inhibits).
e2: has(E1, next_event, E2) :- has(E1, S, E2), next_source(S).
e3: not_fse(Z, E) :- has(Z, subevent, E), has(Z, subevent, E2), has(E2, next_event, E), E != E2.
e4: not_lse(Z, E) :- has(Z, subevent, E), has(Z, subevent, E2), has(E, next_event, E2), E != E2.
e5: has(Z, first_subevent, E) :- has(Z, subevent, E), not not_fse(Z, E).
e6: has(Z, last_subevent, E) :- has(Z, subevent, E), not not_lse(Z, E).

% Event kinds: transport below the transport roots, operational otherwise.
ev1: transport_root(move_through; move_into; move_out_of).
ev2: t_event(E) :- event(E), has_class(E, C), transport_class(C).
ev3: o_event(E) :- event(E), not t_event(E).
aux6: transport_class(C) :- transport_root(C).
aux7: transport_class(C) :- has(C, ancestorclass, R), transport_root(R).

% IO relations: the slot table per kind, then propagation from the first
% subevent (input side) and the last subevent (output side).
aux8: io_slot(object; base; raw_material; result; site; origin; destination).
aux9: io_role(input; output; input_location; output_location).
aux10: ehas(E, S, A) :- has(E, S, A), io_slot(S).
aux11: io(E, R, A) :- has(E, R, A), io_role(R).
i1: io(E, input, A) :- o_event(E), ehas(E, object, A).
i2: io(E, input, A) :- o_event(E), ehas(E, base, A).
i3: io(E, input, A) :- o_event(E), ehas(E, raw_material, A).
i4: io(E, output, A) :- o_event(E), ehas(E, result, A).
i5: io(E, input_location, A) :- o_event(E), ehas(E, site, A).
i6: io(E, input, A) :- t_event(E), ehas(E, object, A).
i7: io(E, output, A) :- t_event(E), ehas(E, object, A).
i8: io(E, input_location, A) :- t_event(E), ehas(E, base, A).
i9: io(E, input_location, A) :- t_event(E), ehas(E, origin, A).
i10: io(E, output_location, A) :- t_event(E), ehas(E, destination, A).
i11: io(E, input, A) :- event(E), has(E, first_subevent, F), io(F, input, A).
i12: ehas(E, object, A) :- t_event(E), has(E, first_subevent, F), ehas(F, object, A).
i13: io(E, input_location, A) :- event(E), has(E, first_subevent, F), io(F, input_location, A).
i14: ehas(E, object, A) :- o_event(E), has(E, first_subevent, F), ehas(F, object, A).
i15: ehas(E, base, A) :- event(E), has(E, first_subevent, F), ehas(F, base, A).
i16: ehas(E, raw_material, A) :- o_event(E), has(E, first_subevent, F), ehas(F, raw_material, A).
i17: ehas(E, origin, A) :- t_event(E), has(E, first_subevent, F), ehas(F, origin, A).
i18: ehas(E, site, A) :- o_event(E), has(E, first_subevent, F), ehas(F, site, A).
i19: io(E, output, A) :- event(E), has(E, last_subevent, L), io(L, output, A).
i20: io(E, output_location, A) :- event(E), has(E, last_subevent, L), io(L, output_location, A).
i21: ehas(E, object, A) :- t_event(E), has(E, last_subevent, L), ehas(L, object, A).
i22: ehas(E, result, A) :- o_event(E), has(E, last_subevent, L), ehas(L, result, A).
i23: ehas(E, destination, A) :- event(E), has(E, last_subevent, L), ehas(L, destination, A).
i24: io(E, output_location, A) :- o_event(E), ehas(E, destination, A).
aux12: has_out_loc(E) :- io(E, output_location, A).
i25: default_out(E, A) :- io(E, input_location, A), event(E), not has_out_loc(E).
aux13: final_io(E, R, A) :- io(E, R, A).
aux14: final_io(E, output_location, A) :- default_out(E, A).
% Literal reading: the guard names an arbitrary entity instead of any location.
lit1: i25_literal(E, A) :- io(E, input_location, A), event(E), entity(A2), not io(E, output_location, A2).

% Main classes: no class of the instance is strictly below them, and general
% classes give way to any specific one.
m1: not_main_class(X, C) :- has_class(X, C), has_class(X, D), has(D, ancestorclass, C).
m2: not_main_class(X, C) :- has_class(X, C), general_class(C), has_class(X, D), not general_class(D).
m3: general_class(thing; event; entity; spatial_entity; tangible_entity; chemical_entity).
m4: main_class(X, C) :- has_class(X, C), not not_main_class(X, C).

% Confidence lattice low < medium < high and its meet.
lc1: level(low; medium; high).
lc2: lower(low, medium).
lc3: lower(medium, high).
lc4: lower(A, C) :- lower(A, B), lower(B, C).
lc5: lowest_confidence(C, C, C) :- level(C).
lc6: lowest_confidence(A, B, A) :- lower(A, B).
lc7: lowest_confidence(A, B, B) :- lower(B, A).
aux15: inst(A) :- has_class(A, C).

% Instance matching, closed under chains through pairwise distinct instances.
ma1: match_with(A, A, high) :- inst(A).
ma2: match_with(A, B, high) :- has(A, cloned_from, B), inst(A), inst(B).
ma3: match_with(A, B, high) :- main_class(A, CA), main_class(B, CB), has(CB, ancestorclass, CA).
ma4: match_with(A, B, medium) :- has(A, cloned_from, C), has(B, cloned_from, C), inst(A), inst(B).
ma5: match_with(A, B, low) :- main_class(A, C), main_class(B, C).
ma6: match_with(A, B, L) :- match_with(A, X, L1), match_with(X, B, L2), A != B, A != X, B != X, lowest_confidence(L1, L2, L).

% Spatial matching between location instances.
aux16: spatial_class(spatial_entity).
aux17: spatial_class(C) :- has(C, ancestorclass, spatial_entity).
aux18: loc(A) :- inst(A), has_class(A, C), spatial_class(C).
sma1: spatially_match(A, B, L) :- match_with(A, B, L), loc(A), loc(B).
sma2: spatially_match(A, B, high) :- has(B, is_inside, A), loc(A), loc(B).
sma3: spatially_match(A, B, high) :- has(B, part_of, A), loc(A), loc(B).
sma4: spatially_match(A, B, L) :- spatially_match(A, X, L1), spatially_match(X, B, L2), A != B, A != X, B != X, lowest_confidence(L1, L2, L).

% Transitive subevents.
tcsub1: has(A, tc_subevent, B) :- has(A, subevent, B).
tcsub2: has(A, tc_subevent, C) :- has(A, subevent, B), has(B, tc_subevent, C).
tcsub3: common_ancestor(A, B) :- has(C, tc_subevent, A), has(C, tc_subevent, B).

% Joins: an output of A matches an input of B and an output location of A
% spatially matches an input location of B, in either direction.
aux19: match_either(A, B, L) :- match_with(A, B, L).
aux20: match_either(A, B, L) :- match_with(B, A, L).
aux21: spatial_either(A, B, L) :- spatially_match(A, B, L).
aux22: spatial_either(A, B, L) :- spatially_match(B, A, L).
j1: io_joined(A, B, L) :- final_io(A, output, X), final_io(B, input, Y), match_either(X, Y, L), event(A), event(B), A != B.
j2: loc_joined(A, B, L) :- final_io(A, output_location, X), final_io(B, input_location, Y), spatial_either(X, Y, L), event(A), event(B), A != B.
j3: join(A, B) :- io_joined(A, B, L1), loc_joined(A, B, L2).

% Possible next events: joins not explained by subevent ancestry.
n1: not_next(A, B) :- join(A, B), has(SB, tc_subevent, B), join(A, SB).
n2: not_next(A, B) :- join(A, B), has(SA, tc_subevent, A), join(SA, B).
n3: not_next(A, B) :- join(A, B), has(A, tc_subevent, B).
n4: not_next(A, B) :- join(A, B), has(B, tc_subevent, A).
n5: not_next(A, B) :- join(A, B), common_ancestor(A, B).
n6: possible_next_event(A, B) :- join(A, B), not not_next(A, B).
"#;

/// The rule program, parsed and stratified.
pub fn encode_program() -> Result<Program> {
    Program::load(syntax::parse_program(PROGRAM)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::syntax::Literal;

    #[test]
    fn group_sizes() {
        let p = encode_program().unwrap();
        let counts = p.group_counts();
        let expect = [
            ("t", 21),
            ("e", 6),
            ("ev", 3),
            ("i", 25),
            ("m", 4),
            ("lc", 7),
            ("ma", 6),
            ("sma", 4),
            ("tcsub", 3),
            ("j", 3),
            ("n", 6),
        ];
        for (group, n) in expect {
            assert_eq!(counts.get(group), Some(&n), "group {group}");
        }
        let labels: Vec<&str> = p.source().iter().map(|r| r.label.as_str()).collect();
        let mut unique = labels.clone();
        unique.sort_unstable();
        unique.dedup();
        assert_eq!(unique.len(), labels.len());
    }

    #[test]
    fn first_subevent_rule_uses_negation() {
        let p = encode_program().unwrap();
        let e5 = p.rule("e5").unwrap();
        assert_eq!(e5.heads[0].args[1].to_string(), "first_subevent");
        assert!(e5
            .body
            .iter()
            .any(|l| matches!(l, Literal::Neg(a) if a.pred == "not_fse")));
    }

    #[test]
    fn empty_base_yields_the_lattice() {
        let m = evaluate(&encode_program().unwrap(), &[]);
        for (a, b, c) in [
            ("low", "high", "low"),
            ("high", "medium", "medium"),
            ("high", "high", "high"),
        ] {
            assert!(m.contains("lowest_confidence", &[a, b, c]));
        }
        assert_eq!(m.tuples("lowest_confidence").len(), 9);
        assert!(m.tuples("event").is_empty());
    }
}
