use std::collections::{BTreeSet, HashMap};
use std::fmt;

use super::ast::{ClassDecl, ClassKind, Program, TypeRef};

pub const ROOT_EXCEPTION: &str = "Exception";
pub const NPE: &str = "NullPointerException";
pub const ASSERTION_ERROR: &str = "AssertionError";
pub const ARITHMETIC_EXCEPTION: &str = "ArithmeticException";

/// Static type of an expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    Str,
    Void,
    /// Type of the `null` literal.
    Null,
    Class(String),
}

impl Type {
    pub fn from_ref(t: &TypeRef) -> Type {
        match t {
            TypeRef::Int => Type::Int,
            TypeRef::Bool => Type::Bool,
            TypeRef::Str => Type::Str,
            TypeRef::Void => Type::Void,
            TypeRef::Class(c) => Type::Class(c.clone()),
        }
    }

    /// Parses the textual form used in hook arguments (`"int"`, `"Foo"`).
    pub fn parse_name(name: &str) -> Type {
        match name {
            "int" => Type::Int,
            "bool" => Type::Bool,
            "string" => Type::Str,
            "void" => Type::Void,
            other => Type::Class(other.to_string()),
        }
    }

    pub fn is_reference(&self) -> bool {
        matches!(self, Type::Class(_) | Type::Str | Type::Null)
    }

    pub fn is_primitive(&self) -> bool {
        matches!(self, Type::Int | Type::Bool | Type::Str)
    }

    pub fn class_name(&self) -> Option<&str> {
        match self {
            Type::Class(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("string"),
            Type::Void => f.write_str("void"),
            Type::Null => f.write_str("null"),
            Type::Class(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CtorSig {
    pub params: Vec<Type>,
}

#[derive(Debug, Clone)]
pub struct MethodSig {
    pub owner: String,
    pub name: String,
    pub params: Vec<Type>,
    pub ret: Type,
    pub is_abstract: bool,
}

#[derive(Debug, Clone)]
pub struct FieldSig {
    pub owner: String,
    pub name: String,
    pub ty: Type,
    pub is_static: bool,
}

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub name: String,
    pub kind: ClassKind,
    /// Direct supertypes: superclass first, then implemented interfaces.
    pub supertypes: Vec<String>,
    pub ctors: Vec<CtorSig>,
    pub fields: Vec<FieldSig>,
    pub methods: Vec<MethodSig>,
    pub builtin: bool,
    /// Whether `supertypes[0]` is an `extends` superclass.
    pub has_superclass: bool,
    /// Position in declaration order (prelude first).
    pub order: usize,
}

impl TypeInfo {
    pub fn is_instantiable(&self) -> bool {
        self.kind == ClassKind::Class
    }

    pub fn superclass(&self) -> Option<&str> {
        if self.has_superclass {
            self.supertypes.first().map(String::as_str)
        } else {
            None
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum TypeTableError {
    #[error("duplicate type `{0}`")]
    Duplicate(String),
    #[error("unknown supertype `{sup}` of `{name}`")]
    UnknownSuper { name: String, sup: String },
    #[error("cyclic inheritance through `{0}`")]
    Cycle(String),
    #[error("`{name}` cannot extend `{sup}`: {reason}")]
    BadSuper { name: String, sup: String, reason: &'static str },
}

/// Names, supertypes, constructors, fields and methods of every type.
#[derive(Debug, Clone, Default)]
pub struct TypeTable {
    types: HashMap<String, TypeInfo>,
    order: Vec<String>,
}

impl TypeTable {
    pub fn build(classes: &[&ClassDecl], builtin_count: usize) -> Result<TypeTable, TypeTableError> {
        let mut table = TypeTable::default();
        for (i, c) in classes.iter().enumerate() {
            if table.types.contains_key(&c.name) {
                return Err(TypeTableError::Duplicate(c.name.clone()));
            }
            let mut supertypes = Vec::new();
            if let Some(e) = &c.extends {
                supertypes.push(e.clone());
            }
            supertypes.extend(c.implements.iter().cloned());
            let info = TypeInfo {
                name: c.name.clone(),
                kind: c.kind,
                supertypes,
                ctors: c
                    .ctors
                    .iter()
                    .map(|k| CtorSig { params: k.params.iter().map(|p| Type::from_ref(&p.ty)).collect() })
                    .collect(),
                fields: c
                    .fields
                    .iter()
                    .map(|f| FieldSig {
                        owner: c.name.clone(),
                        name: f.name.clone(),
                        ty: Type::from_ref(&f.ty),
                        is_static: f.is_static,
                    })
                    .collect(),
                methods: c
                    .methods
                    .iter()
                    .map(|m| MethodSig {
                        owner: c.name.clone(),
                        name: m.name.clone(),
                        params: m.params.iter().map(|p| Type::from_ref(&p.ty)).collect(),
                        ret: Type::from_ref(&m.ret),
                        is_abstract: m.body.is_none(),
                    })
                    .collect(),
                builtin: i < builtin_count,
                has_superclass: c.extends.is_some(),
                order: i,
            };
            table.order.push(c.name.clone());
            table.types.insert(c.name.clone(), info);
        }
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<(), TypeTableError> {
        for name in &self.order {
            let info = &self.types[name];
            for (i, sup) in info.supertypes.iter().enumerate() {
                let Some(s) = self.types.get(sup) else {
                    return Err(TypeTableError::UnknownSuper { name: name.clone(), sup: sup.clone() });
                };
                let is_extends = i == 0 && info.has_superclass;
                let ok = if is_extends {
                    s.kind != ClassKind::Interface
                } else {
                    s.kind == ClassKind::Interface
                };
                if !ok {
                    let reason = if is_extends {
                        "a class can only extend a class"
                    } else {
                        "only interfaces can be implemented"
                    };
                    return Err(TypeTableError::BadSuper { name: name.clone(), sup: sup.clone(), reason });
                }
            }
            // Cycle detection: walk all ancestors.
            let mut seen = BTreeSet::new();
            let mut stack: Vec<&str> = info.supertypes.iter().map(String::as_str).collect();
            while let Some(t) = stack.pop() {
                if t == name {
                    return Err(TypeTableError::Cycle(name.clone()));
                }
                if seen.insert(t) {
                    if let Some(i) = self.types.get(t) {
                        stack.extend(i.supertypes.iter().map(String::as_str));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&TypeInfo> {
        self.types.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.types.contains_key(name)
    }

    /// Type names in declaration order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.order.iter().map(String::as_str)
    }

    /// Reflexive, transitive subtype test over class names.
    pub fn is_subclass(&self, sub: &str, sup: &str) -> bool {
        if sub == sup {
            return true;
        }
        let mut stack = vec![sub];
        let mut seen = BTreeSet::new();
        while let Some(t) = stack.pop() {
            if t == sup {
                return true;
            }
            if !seen.insert(t) {
                continue;
            }
            if let Some(info) = self.types.get(t) {
                stack.extend(info.supertypes.iter().map(String::as_str));
            }
        }
        false
    }

    /// Assignability of a value of static type `from` into a slot of type `to`.
    pub fn is_assignable(&self, from: &Type, to: &Type) -> bool {
        match (from, to) {
            (Type::Null, Type::Class(_) | Type::Str) => true,
            (Type::Class(a), Type::Class(b)) => self.is_subclass(a, b),
            (a, b) => a == b,
        }
    }

    /// `required` and all of its subtypes, in declaration order with `required` first.
    pub fn subtypes_of(&self, required: &str) -> Vec<&TypeInfo> {
        let mut out = Vec::new();
        if let Some(t) = self.types.get(required) {
            out.push(t);
        }
        for name in &self.order {
            if name != required && self.is_subclass(name, required) {
                out.push(&self.types[name]);
            }
        }
        out
    }

    /// Concrete (non-abstract, non-interface) subtypes of `required`.
    pub fn concrete_subtypes(&self, required: &str) -> Vec<&TypeInfo> {
        self.subtypes_of(required).into_iter().filter(|t| t.is_instantiable()).collect()
    }

    /// Superclass chain starting at `name` itself.
    pub fn class_chain(&self, name: &str) -> Vec<&TypeInfo> {
        let mut out = Vec::new();
        let mut cur = self.types.get(name);
        while let Some(t) = cur {
            out.push(t);
            cur = t.superclass().and_then(|s| self.types.get(s));
        }
        out
    }

    pub fn find_field(&self, class: &str, field: &str) -> Option<&FieldSig> {
        self.class_chain(class)
            .into_iter()
            .find_map(|t| t.fields.iter().find(|f| f.name == field))
    }

    /// Method lookup through superclasses, then through all interfaces.
    pub fn find_method(&self, class: &str, method: &str) -> Option<&MethodSig> {
        let mut stack = vec![class];
        let mut seen = BTreeSet::new();
        let mut abstract_hit = None;
        // Breadth over the superclass chain first so concrete overrides win.
        for t in self.class_chain(class) {
            if let Some(m) = t.methods.iter().find(|m| m.name == method) {
                if !m.is_abstract {
                    return Some(m);
                }
                abstract_hit.get_or_insert(m);
            }
        }
        while let Some(t) = stack.pop() {
            if !seen.insert(t) {
                continue;
            }
            if let Some(info) = self.types.get(t) {
                if let Some(m) = info.methods.iter().find(|m| m.name == method) {
                    abstract_hit.get_or_insert(m);
                }
                stack.extend(info.supertypes.iter().map(String::as_str));
            }
        }
        abstract_hit
    }

    pub fn is_throwable(&self, class: &str) -> bool {
        self.is_subclass(class, ROOT_EXCEPTION) || self.is_subclass(class, crate::transform::hooks::FORCE_RETURN)
    }
}

/// Builds the table for a program together with the built-in prelude.
pub fn table_for(prelude: &Program, program: &Program) -> Result<TypeTable, TypeTableError> {
    let all: Vec<&ClassDecl> = prelude.classes.iter().chain(program.classes.iter()).collect();
    TypeTable::build(&all, prelude.classes.len())
}
