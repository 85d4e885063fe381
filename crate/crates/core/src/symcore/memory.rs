//! Simulated memory: every variable, parameter pointee, global and stub
//! result is an object with an element type, an element count and a total
//! size. Cells are keyed by byte offset. The model is generic over the cell
//! value so the symbolic engine and the concrete replay share its shape.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::frontend::{Program, SubjectType};

use super::plan::Leaf;

pub type ObjectId = usize;
pub type VoidSlot = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Param,
    Global,
    Local,
    Stub,
    /// The object a pointer-valued input points to.
    Pointee,
}

/// What a pointer designates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PtrTarget<V> {
    Object(ObjectId),
    Null,
    /// A literal address, e.g. `(int *)0x52`.
    Fixed(V),
    /// A `void *` value; the slot's alias says what it really points to.
    Void(VoidSlot),
    /// A typed pointer converted from a `void *` whose slot has no alias.
    UnboundVoid(VoidSlot),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointerValue<V> {
    pub target: PtrTarget<V>,
    /// Byte offset into the target object.
    pub offset: V,
    /// Boolean input deciding whether this pointer is null. Only input
    /// pointers carry one; the replay resolves it up front.
    pub null_flag: Option<V>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cell<V> {
    Int(V),
    Ptr(PointerValue<V>),
}

impl<V> Cell<V> {
    pub fn as_int(&self) -> Option<&V> {
        match self {
            Cell::Int(v) => Some(v),
            Cell::Ptr(_) => None,
        }
    }

    pub fn as_ptr(&self) -> Option<&PointerValue<V>> {
        match self {
            Cell::Ptr(p) => Some(p),
            Cell::Int(_) => None,
        }
    }
}

/// One record element inside an object, linked to its neighbours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordBlock {
    pub start: u32,
    pub end: u32,
    pub prev: Option<usize>,
    pub next: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryObject<V> {
    pub id: ObjectId,
    pub name: String,
    pub elem_ty: SubjectType,
    pub elem_size: u32,
    pub count: u32,
    pub total_size: u32,
    pub origin: Origin,
    pub cells: BTreeMap<u32, (SubjectType, Cell<V>)>,
    pub record_blocks: Vec<RecordBlock>,
}

impl<V> MemoryObject<V> {
    /// The record element containing byte `offset`, for record objects.
    pub fn record_block_at(&self, offset: u32) -> Option<(usize, &RecordBlock)> {
        self.record_blocks.iter().enumerate().find(|(_, b)| b.start <= offset && offset < b.end)
    }

    /// Offsets of cells whose type is compatible with an access of `ty`.
    pub fn candidates<'a>(&'a self, ty: &'a SubjectType) -> impl Iterator<Item = u32> + 'a {
        self.cells.iter().filter(move |(_, (t, _))| compatible(t, ty)).map(|(o, _)| *o)
    }
}

/// The alias recorded for a `void *` slot: the typed pointer it was made
/// from and that pointer's element type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VoidMemory<V> {
    pub alias: Option<(PointerValue<V>, SubjectType)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, thiserror::Error)]
pub enum MemFault {
    #[error("null pointer dereference")]
    NullDereference,
    #[error("dereference of a fixed memory address")]
    FixedMemoryAddress,
    #[error("dereference of a void pointer with no alias")]
    UnboundVoidAlias,
    #[error("access outside the object")]
    OutOfBounds,
    /// Access that does not line up with a cell of a compatible type.
    #[error("type-punned memory access")]
    TypeMismatch,
}

/// Cell type `cell` can be read or written as `access`.
pub fn compatible(cell: &SubjectType, access: &SubjectType) -> bool {
    if cell.is_pointer() || access.is_pointer() {
        return cell.is_pointer() && access.is_pointer();
    }
    match (cell.int_ty(), access.int_ty()) {
        (Some(a), Some(b)) => a.bits == b.bits,
        _ => false,
    }
}

/// A copy-on-write collection of objects; cloning is cheap and clones are
/// independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemoryState<V> {
    objects: Vec<Arc<MemoryObject<V>>>,
    void_table: Vec<VoidMemory<V>>,
}

impl<V> Default for MemoryState<V> {
    fn default() -> Self {
        MemoryState { objects: Vec::new(), void_table: Vec::new() }
    }
}

impl<V: Clone> MemoryState<V> {
    pub fn new() -> Self {
        Self::default()
    }

    /// New object of `count` elements of `ty`; `init` gives each scalar
    /// leaf's initial cell.
    #[allow(clippy::too_many_arguments)]
    pub fn allocate(
        &mut self,
        program: &Program,
        ty: &SubjectType,
        count: u32,
        origin: Origin,
        name: &str,
        leaves: &[Leaf],
        mut init: impl FnMut(&Leaf) -> Cell<V>,
    ) -> ObjectId {
        assert!(count >= 1, "objects have at least one element");
        let elem_size = program.size_of(ty);
        let id = self.objects.len();
        let cells = leaves.iter().map(|l| (l.offset, (l.ty.clone(), init(l)))).collect();
        let record_blocks = if matches!(ty, SubjectType::Record(_)) {
            (0..count as usize)
                .map(|i| RecordBlock {
                    start: i as u32 * elem_size,
                    end: (i as u32 + 1) * elem_size,
                    prev: i.checked_sub(1),
                    next: (i + 1 < count as usize).then_some(i + 1),
                })
                .collect()
        } else {
            Vec::new()
        };
        self.objects.push(Arc::new(MemoryObject {
            id,
            name: name.to_string(),
            elem_ty: ty.clone(),
            elem_size,
            count,
            total_size: elem_size * count,
            origin,
            cells,
            record_blocks,
        }));
        id
    }

    pub fn object(&self, id: ObjectId) -> &MemoryObject<V> {
        &self.objects[id]
    }

    pub fn objects(&self) -> impl Iterator<Item = &MemoryObject<V>> {
        self.objects.iter().map(|o| &**o)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    /// The object a dereference of `ptr` reaches, ignoring its null flag.
    pub fn target_object(&self, ptr: &PointerValue<V>) -> Result<ObjectId, MemFault> {
        match &ptr.target {
            PtrTarget::Object(id) => Ok(*id),
            PtrTarget::Null => Err(MemFault::NullDereference),
            PtrTarget::Fixed(_) => Err(MemFault::FixedMemoryAddress),
            PtrTarget::UnboundVoid(_) => Err(MemFault::UnboundVoidAlias),
            // void is not an object type; the checker never lets one through
            PtrTarget::Void(_) => Err(MemFault::TypeMismatch),
        }
    }

    fn check_access(&self, id: ObjectId, offset: i64, ty: &SubjectType, size: u32) -> Result<u32, MemFault> {
        let obj = &self.objects[id];
        if offset < 0 || offset + i64::from(size) > i64::from(obj.total_size) {
            return Err(MemFault::OutOfBounds);
        }
        let off = offset as u32;
        match obj.cells.get(&off) {
            Some((t, _)) if compatible(t, ty) => Ok(off),
            _ => Err(MemFault::TypeMismatch),
        }
    }

    /// Read the cell at a concrete byte offset.
    pub fn load(&self, id: ObjectId, offset: i64, ty: &SubjectType, size: u32) -> Result<&Cell<V>, MemFault> {
        let off = self.check_access(id, offset, ty, size)?;
        Ok(&self.objects[id].cells[&off].1)
    }

    /// Overwrite the cell at a concrete byte offset; nothing else changes.
    pub fn store(
        &mut self,
        id: ObjectId,
        offset: i64,
        ty: &SubjectType,
        size: u32,
        cell: Cell<V>,
    ) -> Result<(), MemFault>
    where
        V: Clone,
    {
        let off = self.check_access(id, offset, ty, size)?;
        let obj = Arc::make_mut(&mut self.objects[id]);
        obj.cells.get_mut(&off).expect("checked").1 = cell;
        Ok(())
    }

    /// Overwrite cells without the compatibility check, for whole-object
    /// (re)initialisation.
    pub fn reinit(&mut self, id: ObjectId, mut f: impl FnMut(u32, &SubjectType) -> Cell<V>) {
        let obj = Arc::make_mut(&mut self.objects[id]);
        for (off, (ty, cell)) in obj.cells.iter_mut() {
            *cell = f(*off, ty);
        }
    }

    /// Write through an already-resolved mutable object.
    pub fn object_mut(&mut self, id: ObjectId) -> &mut MemoryObject<V> {
        Arc::make_mut(&mut self.objects[id])
    }

    pub fn new_void_slot(&mut self) -> VoidSlot {
        self.void_table.push(VoidMemory { alias: None });
        self.void_table.len() - 1
    }

    /// Record that `slot` holds the value of `typed`, whose element type is
    /// `elem`. A later bind replaces the earlier one.
    pub fn bind_void_alias(&mut self, slot: VoidSlot, typed: PointerValue<V>, elem: SubjectType) {
        self.void_table[slot].alias = Some((typed, elem));
    }

    pub fn void_alias(&self, slot: VoidSlot) -> Option<&(PointerValue<V>, SubjectType)> {
        self.void_table[slot].alias.as_ref()
    }

    /// Typed view of a `void *`: the alias if bound, otherwise a pointer
    /// whose dereference faults.
    pub fn resolve_void(&self, ptr: &PointerValue<V>) -> PointerValue<V> {
        match &ptr.target {
            PtrTarget::Void(slot) => match self.void_alias(*slot) {
                Some((p, _)) => {
                    PointerValue { null_flag: ptr.null_flag.clone().or_else(|| p.null_flag.clone()), ..p.clone() }
                }
                None => PointerValue { target: PtrTarget::UnboundVoid(*slot), ..ptr.clone() },
            },
            _ => ptr.clone(),
        }
    }

    /// `void *` view of a typed pointer. Object pointers get a fresh slot
    /// aliasing them; null and fixed pointers stay as they are.
    pub fn to_void(&mut self, ptr: &PointerValue<V>, elem: &SubjectType) -> PointerValue<V> {
        match &ptr.target {
            PtrTarget::Object(_) | PtrTarget::UnboundVoid(_) => {
                if let PtrTarget::UnboundVoid(slot) = ptr.target {
                    return PointerValue { target: PtrTarget::Void(slot), ..ptr.clone() };
                }
                let slot = self.new_void_slot();
                self.bind_void_alias(slot, ptr.clone(), elem.clone());
                PointerValue { target: PtrTarget::Void(slot), ..ptr.clone() }
            }
            _ => ptr.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::semantics::IntTy;
    use crate::symcore::plan::{leaves, Base};

    fn int32() -> SubjectType {
        SubjectType::Int(IntTy::I32)
    }

    fn alloc(m: &mut MemoryState<i64>, p: &Program, ty: &SubjectType, count: u32, origin: Origin) -> ObjectId {
        let ls = leaves(p, ty, count, &Base::Named("v".into()));
        m.allocate(p, ty, count, origin, "v", &ls, |_| Cell::Int(0))
    }

    #[test]
    fn sizes() {
        let p = parse("struct r { int a; char b; };").unwrap();
        let mut m = MemoryState::new();
        let a = alloc(&mut m, &p, &int32(), 1, Origin::Param);
        assert_eq!(m.object(a).cells.len(), 1);
        let b = alloc(&mut m, &p, &SubjectType::Int(IntTy::I8), 10, Origin::Local);
        assert_eq!((m.object(b).total_size, m.object(b).count), (10, 10));
        let r = SubjectType::Record(0);
        let c = alloc(&mut m, &p, &r, 2, Origin::Global);
        assert_eq!(m.object(c).total_size, 2 * p.layout_of(0).total_size);
        assert_eq!(m.object(c).total_size, 16);
        let blocks = &m.object(c).record_blocks;
        assert_eq!(blocks[0], RecordBlock { start: 0, end: 8, prev: None, next: Some(1) });
        assert_eq!(blocks[1], RecordBlock { start: 8, end: 16, prev: Some(0), next: None });
        assert_eq!(m.object(c).record_block_at(9).map(|b| b.0), Some(1));
    }

    #[test]
    fn bounds_and_read_your_write() {
        let p = parse("").unwrap();
        let mut m = MemoryState::new();
        let a = alloc(&mut m, &p, &int32(), 10, Origin::Param);
        assert_eq!(m.object(a).total_size, 40);
        assert_eq!(m.load(a, 4, &int32(), 4), Ok(&Cell::Int(0)));
        assert_eq!(m.load(a, 40, &int32(), 4), Err(MemFault::OutOfBounds));
        assert_eq!(m.load(a, -4, &int32(), 4), Err(MemFault::OutOfBounds));
        assert_eq!(m.load(a, 2, &int32(), 4), Err(MemFault::TypeMismatch));
        m.store(a, 8, &int32(), 4, Cell::Int(77)).unwrap();
        assert_eq!(m.load(a, 8, &int32(), 4), Ok(&Cell::Int(77)));
        assert_eq!(m.load(a, 4, &int32(), 4), Ok(&Cell::Int(0)));
    }

    #[test]
    fn pointer_faults() {
        let m: MemoryState<i64> = MemoryState::new();
        let null = PointerValue { target: PtrTarget::Null, offset: 0, null_flag: None };
        assert_eq!(m.target_object(&null), Err(MemFault::NullDereference));
        let fixed = PointerValue { target: PtrTarget::Fixed(0x52), offset: 0, null_flag: None };
        assert_eq!(m.target_object(&fixed), Err(MemFault::FixedMemoryAddress));
    }

    #[test]
    fn void_aliases() {
        let p = parse("").unwrap();
        let mut m = MemoryState::new();
        let a = alloc(&mut m, &p, &int32(), 1, Origin::Local);
        let b = alloc(&mut m, &p, &int32(), 1, Origin::Local);
        m.store(b, 0, &int32(), 4, Cell::Int(9)).unwrap();
        let pa = PointerValue { target: PtrTarget::Object(a), offset: 0, null_flag: None };
        let pb = PointerValue { target: PtrTarget::Object(b), offset: 0, null_flag: None };

        let slot = m.new_void_slot();
        let v = PointerValue { target: PtrTarget::Void(slot), offset: 0, null_flag: None };
        let unbound = m.resolve_void(&v);
        assert_eq!(m.target_object(&unbound), Err(MemFault::UnboundVoidAlias));

        m.bind_void_alias(slot, pa, int32());
        let t = m.resolve_void(&v);
        let id = m.target_object(&t).unwrap();
        m.store(id, 0, &int32(), 4, Cell::Int(5)).unwrap();
        assert_eq!(m.load(a, 0, &int32(), 4), Ok(&Cell::Int(5)));

        m.bind_void_alias(slot, pb, int32());
        let t = m.resolve_void(&v);
        let id = m.target_object(&t).unwrap();
        assert_eq!(m.load(id, 0, &int32(), 4), Ok(&Cell::Int(9)));
    }

    #[test]
    fn clones_are_independent() {
        let p = parse("").unwrap();
        let mut m = MemoryState::new();
        let a = alloc(&mut m, &p, &int32(), 4, Origin::Param);
        let before = m.clone();
        let mut copy = m.clone();
        copy.store(a, 4, &int32(), 4, Cell::Int(3)).unwrap();
        copy.new_void_slot();
        assert_eq!(m, before);
        for (off, (_, c)) in &m.object(a).cells {
            assert_eq!(c, &Cell::Int(0), "offset {off}");
        }
    }
}
