//! Building input objects from their plans, for any cell value type.

use crate::frontend::Program;
use crate::semantics::IntTy;

use super::memory::{Cell, MemoryState, ObjectId, Origin, PointerValue, PtrTarget};
use super::plan::{LeafInit, ObjectPlan};

/// Supplies the value of each named input leaf.
pub trait LeafSource<V> {
    fn int(&mut self, name: &str, ty: IntTy, boolean: bool) -> V;
    /// The byte offset zero.
    fn zero(&mut self) -> V;
}

/// Allocate the object described by `plan`, and every object its pointer
/// leaves point to (pointees first).
pub fn materialize<V: Clone>(
    mem: &mut MemoryState<V>,
    program: &Program,
    plan: &ObjectPlan,
    origin: Origin,
    name: &str,
    src: &mut dyn LeafSource<V>,
) -> ObjectId {
    let mut cells = Vec::with_capacity(plan.leaves.len());
    for (_, init) in &plan.leaves {
        cells.push(leaf_cell(mem, program, init, src));
    }
    let leaves: Vec<_> = plan.leaves.iter().map(|(l, _)| l.clone()).collect();
    let mut it = cells.into_iter();
    mem.allocate(program, &plan.ty, plan.count, origin, name, &leaves, |_| it.next().expect("one cell per leaf"))
}

/// The cell an input leaf starts with.
pub fn leaf_cell<V: Clone>(
    mem: &mut MemoryState<V>,
    program: &Program,
    init: &LeafInit,
    src: &mut dyn LeafSource<V>,
) -> Cell<V> {
    match init {
        LeafInit::Int { name, ty, boolean } => Cell::Int(src.int(name, *ty, *boolean)),
        LeafInit::Pointer { null_flag, pointee, void } => {
            let flag = null_flag.as_ref().map(|f| src.int(f, IntTy::U8, true));
            let target = match (pointee, void) {
                (Some(p), _) => {
                    let label = match &p.base {
                        super::plan::Base::Named(n) | super::plan::Base::Pointee(n) => format!("*{n}"),
                    };
                    PtrTarget::Object(materialize(mem, program, p, Origin::Pointee, &label, src))
                }
                (None, true) if flag.is_some() => PtrTarget::Void(mem.new_void_slot()),
                (None, _) => PtrTarget::Null,
            };
            let null_flag = if matches!(target, PtrTarget::Null) { None } else { flag };
            Cell::Ptr(PointerValue { target, offset: src.zero(), null_flag })
        }
    }
}
